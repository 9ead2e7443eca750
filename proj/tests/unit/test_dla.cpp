#include <cmath>
#include <map>
#include <sstream>

#include "doctest.h"
#include "ldla/dla.hpp"
#include "stats.hpp"
#include "tables.hpp"

using namespace ldla;
using test::fixture;

namespace {

std::string log_text(const EventLog& log) {
  std::ostringstream out;
  write_event_log(out, log);
  return out.str();
}

}  // namespace

TEST_CASE("first gluing from a single point follows pmf(x)(G(0) - G(x))") {
  const auto& f = fixture(0.5);
  const PotentialState s(f.table, {0});
  Rng rng(31);
  const int N = 20000;
  std::map<long, double> counts;
  for (int i = 0; i < N; ++i) {
    const auto [parent, child] = sample_gluing(s, f.law, rng);
    REQUIRE(parent == 0);
    counts[static_cast<long>(child)] += 1;
  }
  std::vector<double> obs, exp;
  double rest_obs = N, rest_exp = N;
  for (long x = -100; x <= 100; ++x) {
    if (x == 0) continue;
    const double e = N * gluing_measure(s, f.law, x, 0);
    if (e < 20) continue;
    obs.push_back(counts[x]);
    exp.push_back(e);
    rest_obs -= counts[x];
    rest_exp -= e;
  }
  obs.push_back(rest_obs);
  exp.push_back(rest_exp);
  CHECK(test::chi_square(obs, exp).p_value > 0.01);
}

TEST_CASE("parent of a successful activation follows the harmonic measure") {
  const auto& f = fixture(0.5);
  const PotentialState s(f.table, {-3, 0, 7});
  const HarmonicMeasure h = harmonic_measure(s);
  Rng rng(32);
  const int N = 20000;
  std::vector<double> counts(3, 0.0);
  for (int i = 0; i < N; ++i) counts[s.index_of(sample_gluing(s, f.law, rng).first)] += 1;
  for (std::size_t i = 0; i < 3; ++i) {
    const double p = h.weights[i];
    CHECK(std::fabs(counts[i] / N - p) <= 3.0 * std::sqrt(p * (1 - p) / N));
  }
}

TEST_CASE("runs are reproducible and replayable") {
  const auto& f = fixture(0.5);
  const EventLog a = dla_run(f.law, f.table, 128, 7);
  const EventLog b = dla_run(f.law, f.table, 128, 7);
  CHECK(log_text(a) == log_text(b));
  CHECK(log_text(a) != log_text(dla_run(f.law, f.table, 128, 8)));
  REQUIRE(a.events.size() == 127);

  const Aggregate agg = replay(a, f.law, f.table);
  std::vector<Site> live{0};
  for (const GluingEvent& e : a.events) live.push_back(e.child);
  CHECK(agg.potential().points() == live);
  CHECK(agg.capacity() == doctest::Approx(a.final_state->capacity).epsilon(1e-12));

  std::istringstream in(log_text(a));
  const EventLog back = read_event_log(in);
  CHECK(log_text(back) == log_text(a));

  EventLog prefix = a;
  prefix.events.resize(40);
  prefix.snapshots.clear();
  prefix.final_state.reset();
  const Aggregate part = replay(prefix, f.law, f.table);
  CHECK(part.n() == 41);
  CHECK(std::vector<Site>(live.begin(), live.begin() + 41) == part.potential().points());

  EventLog broken = a;
  broken.events[10].capacity *= 1.01;
  CHECK_THROWS(replay(broken, f.law, f.table));
}

TEST_CASE("logged capacities match fresh solves") {
  Rng pick(1);
  for (double alpha : {0.25, 0.5, 0.75}) {
    const auto& f = fixture(alpha);
    for (int rep = 0; rep < 3; ++rep) {
      const EventLog log = dla_run(f.law, f.table, 96, pick.bits());
      std::vector<Site> pts{0};
      for (std::size_t i = 0; i < log.events.size(); ++i) {
        pts.push_back(log.events[i].child);
        if (i % 19 == 0 || i + 1 == log.events.size()) {
          const PotentialState fresh(f.table, pts);
          CHECK(log.events[i].capacity == doctest::Approx(fresh.capacity()).epsilon(1e-7));
        }
      }
    }
  }
}

TEST_CASE("event bookkeeping") {
  const auto& f = fixture(0.25);
  const EventLog one = dla_run(f.law, f.table, 1, 3);
  CHECK(one.events.empty());
  CHECK(one.final_state->n == 1);

  DlaOptions o;
  o.split = SplitThreshold::parse("value:1000");
  const EventLog log = dla_run(f.law, f.table, 512, 5, o);
  CHECK(log.final_state->diameter >= 511);
  CHECK(log.header.D == Site{1000});
  double t = 0.0;
  for (std::size_t i = 0; i < log.events.size(); ++i) {
    const GluingEvent& e = log.events[i];
    CHECK(e.n_before == static_cast<std::int64_t>(i) + 1);
    CHECK(e.t >= t);
    t = e.t;
    CHECK(e.split_flag == (e.step_size > 1000));
    CHECK(e.step_size == site_abs(e.child - e.parent));
    CHECK(e.rejected_splits <= e.rejected_proposals);
  }
  // snapshots at powers of two
  std::int64_t expect = 1;
  for (const Snapshot& s : log.snapshots) {
    CHECK(s.n == expect);
    expect *= 2;
  }
}

TEST_CASE("split threshold parsing") {
  CHECK(SplitThreshold::parse("none").kind == SplitThreshold::Kind::None);
  CHECK(SplitThreshold::parse("value:42").resolve(0.5, 10) == Site{42});
  const SplitThreshold s = SplitThreshold::parse("formula:2.5,0.9");
  CHECK(SplitThreshold::parse(s.to_string()).M == 2.5);
  const Site D = *s.resolve(0.5, 100);
  CHECK(to_double(D) == std::floor(std::pow(6 * 0.9 * 100 * 2.5 / std::log(100.0), 2.0)));
  CHECK_THROWS(SplitThreshold::parse("value:-1"));
  CHECK_THROWS(SplitThreshold::parse("bogus:1"));
}

TEST_CASE("diameter exceeds the capacity scale infinitely often") {
  // max over m of D_m / (m^2 / capa(A_m))^{1/alpha} >= 1 in most runs
  const auto& f = fixture(0.25);
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const EventLog log = dla_run(f.law, f.table, 512, derive_seed(100, seed));
    Site lo = 0, hi = 0;
    double best = 0.0;
    for (const GluingEvent& e : log.events) {
      lo = std::min(lo, e.child);
      hi = std::max(hi, e.child);
      const double m = static_cast<double>(e.n_before + 1);
      best = std::max(best, to_double(hi - lo) / std::pow(m * m / e.capacity, 4.0));
    }
    if (best >= 1.0) ++hits;
  }
  MESSAGE("runs reaching the scale: " << hits << " of 20");
  CHECK(hits >= 8);
}
