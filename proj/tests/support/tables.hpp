#pragma once

#include <map>
#include <memory>
#include <mutex>

#include "ldla/green.hpp"

namespace ldla::test {

struct LawAndTable {
  StepLaw law;
  GreenTable table;
};

// Default-resolution tables, built once per alpha per process.
inline const LawAndTable& fixture(double alpha) {
  static std::mutex mu;
  static std::map<double, std::unique_ptr<LawAndTable>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[alpha];
  if (!slot) {
    StepLaw law(alpha);
    GreenOptions o;
    GreenTable table = build_table(law, o);
    slot = std::make_unique<LawAndTable>(LawAndTable{std::move(law), std::move(table)});
  }
  return *slot;
}

}  // namespace ldla::test
