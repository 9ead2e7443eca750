#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "ldla/green.hpp"
#include "ldla/potential.hpp"
#include "ldla/steplaw.hpp"

namespace ldla {

struct HittingParams {
  std::int64_t n_walks = 100'000;
  // A walk counts as escaped once hit_probability at its position drops below this.
  double eps_escape = 1e-4;
  std::int64_t step_budget = 10'000'000;
  std::uint64_t seed = 1;
  std::int64_t chunk = 2048;
  int threads = 1;
  // Allow the start inside A; then hits are counted from time 1 on.
  bool start_in_set = false;
};

struct HittingResult {
  std::int64_t walks = 0;
  std::int64_t hits = 0;
  std::int64_t escaped = 0;
  std::int64_t unresolved = 0;
  std::int64_t steps = 0;
  double eps_escape = 0.0;
  // Confidence interval for P(hit), widened by eps_escape per escaped walk and
  // by one per unresolved walk.
  Interval hit_prob;
  double hit_mean = 0.0;
  double std_error = 0.0;
  std::vector<Site> points;
  std::vector<std::int64_t> hit_counts;  // by entry point, aligned with points
  std::map<std::pair<Site, Site>, std::int64_t> last_counts;  // (x, a) -> count

  std::vector<double> hit_distribution() const;
  /// Binomial standard error of hit_counts[i] / walks.
  double entry_std_error(std::size_t i) const;
  /// P_start(hit at points[i]) estimate.
  double entry_prob(std::size_t i) const { return static_cast<double>(hit_counts[i]) / static_cast<double>(walks); }
};

/// Step-by-step walks from `start` until they enter A, escape, or exceed the
/// step budget. A is given by `state`, which also supplies the escape test.
HittingResult mc_hitting(const StepLaw& law, const PotentialState& state, Site start, const HittingParams& params);

HittingResult mc_hitting(const StepLaw& law, const GreenTable& table, const std::vector<Site>& points, Site start,
                         const HittingParams& params);

struct HgpiEntry {
  Site a = 0;
  double direct = 0.0;  // H_A(x, a)
  double direct_se = 0.0;
  double predicted = 0.0;  // sum_z G(x - z)(I - Pi)(z, a)
  double predicted_se = 0.0;
  double bias = 0.0;  // escape truncation allowance on both sides
  double z_score = 0.0;
  bool within = false;  // |direct - predicted| <= 3 combined se + bias
};

struct HgpiColumn {
  Site a = 0;
  double column_sum = 0.0;  // sum_z (I - Pi)(z, a)
  double se = 0.0;
  double bias = 0.0;
  double w = 0.0;
  bool within = false;
};

struct HgpiReport {
  Site x = 0;
  std::vector<HgpiEntry> entries;
  std::vector<HgpiColumn> columns;
  std::vector<std::vector<double>> pi;  // Pi(z, a), rows by z
  std::vector<double> pi_row_sums;
  bool all_within() const;
};

HgpiReport hgpi_check(const StepLaw& law, const GreenTable& table, const std::vector<Site>& points, Site x,
                      const HittingParams& params);

}  // namespace ldla
