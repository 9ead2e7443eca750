#include <cmath>
#include <set>

#include "doctest.h"
#include "ldla/sdla.hpp"
#include "stats.hpp"
#include "tables.hpp"

using namespace ldla;
using test::fixture;

TEST_CASE("degenerate threshold births S on the first activation") {
  const auto& f = fixture(0.25);
  const SdlaResult r = sdla_run(f.law, f.table, 32, 1, 0, 5);
  REQUIRE(r.beta_q);
  REQUIRE(!r.events.empty());
  CHECK(r.events.front().component == 1);
  CHECK(r.events.front().event.rejected_proposals == 0);
  CHECK(r.S.front() == *r.b_q);
  CHECK(r.split_count >= 1);
  // Only S_hat's first proposal preceded the birth, so beta is its clock.
  Rng rng(derive_seed(5, 0));
  const PotentialState s0(f.table, {0});
  const Proposal p = draw_proposal(s0, f.law, rng);
  CHECK(*r.beta_q == p.dt);
  CHECK(*r.b_q == p.target);
  CHECK(static_cast<std::int64_t>(r.S.size() + r.S_hat.size()) == 32);
}

TEST_CASE("split bookkeeping") {
  const auto& f = fixture(0.25);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SdlaResult r = sdla_run(f.law, f.table, 64, 3, 100000, seed);
    // S is empty iff fewer than q splits iff no birth time
    CHECK(r.S.empty() == (r.split_count < 3));
    CHECK(r.S.empty() == !r.beta_q.has_value());
    CHECK(r.stream_hat != r.stream_s);
    if (!r.overlap && !r.S.empty()) {
      std::set<Site> hat(r.S_hat.begin(), r.S_hat.end());
      for (Site x : r.S) CHECK(hat.count(x) == 0);
    }
    if (r.zeta_q) CHECK(*r.zeta_q >= *r.beta_q);
  }
}

TEST_CASE("S_hat and the coupled DLA agree before the birth") {
  const auto& f = fixture(0.25);
  const Site D = 20000;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const SdlaResult s = sdla_run(f.law, f.table, 96, 2, D, seed);
    const EventLog log = dla_run(f.law, f.table, 96, seed);
    const CouplingReport c = coupled_run(f.law, f.table, 96, 2, D, seed);
    CHECK(c.born == s.beta_q.has_value());
    std::size_t k = 0;
    for (const SdlaEvent& e : s.events) {
      if (e.component != 0) break;
      REQUIRE(k < log.events.size());
      CHECK(e.event.child == log.events[k].child);
      CHECK(e.event.t == log.events[k].t);
      ++k;
    }
    if (s.beta_q && c.beta_q) {
      CHECK(*c.beta_q == *s.beta_q);
      CHECK(*c.b_q == *s.b_q);
    }
  }
}

TEST_CASE("coupling reports") {
  const auto& f = fixture(0.25);
  std::int64_t born = 0, clean = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CouplingOptions o;
    o.q_max = 4;
    const auto reps = coupled_run(f.law, f.table, 96, 5000, seed, o);
    REQUIRE(reps.size() == 4);
    for (const CouplingReport& r : reps) {
      CHECK(r.equal_at_tau == !r.first_interaction.has_value());
      CHECK(r.truncation_error >= 0.0);
      CHECK(!r.trajectory_budget_exceeded);
      if (!r.born) continue;
      ++born;
      if (r.first_interaction) {
        CHECK((r.first_interaction->kind == "T_S_hits_S_hat" || r.first_interaction->kind == "T_hat_hits_S"));
        CHECK(r.first_interaction->t >= *r.beta_q);
        continue;
      }
      ++clean;
      CHECK(r.colour_consistent);
      CHECK(r.s_size + r.s_hat_size == 96);
      CHECK(r.s_trace.front().second == 1);
    }
  }
  MESSAGE("born " << born << ", without interaction " << clean);
  CHECK(born > 0);
  CHECK(clean > 0);
}

TEST_CASE("birth-relative processes have the same law for q = 1 and q = 2") {
  const auto& f = fixture(0.25);
  const double t0 = 1.0;
  int stopped = 0;
  std::vector<double> a, b;
  CouplingOptions o;
  o.q_max = 2;
  for (std::uint64_t seed = 0; seed < 600; ++seed) {
    const auto reps = coupled_run(f.law, f.table, 160, 200000, derive_seed(77, seed), o);
    for (const CouplingReport& r : reps) {
      if (!r.born) continue;
      const double beta = *r.beta_q;
      const bool killed = r.zeta_q && *r.zeta_q - beta <= t0;
      const double end = std::min({r.zeta_q ? *r.zeta_q : INFINITY,
                                   r.first_interaction ? r.first_interaction->t : INFINITY, r.end_time});
      double v;
      if (killed) {
        v = 0.0;
      } else if (end - beta > t0) {
        v = 0.0;
        for (const auto& [t, size] : r.s_trace)
          if (t <= t0) v = static_cast<double>(size);
      } else {
        ++stopped;  // observation ended before t0
        continue;
      }
      (r.q == 1 ? a : b).push_back(v);
    }
  }
  MESSAGE("samples " << a.size() << " and " << b.size() << ", stopped early " << stopped);
  CHECK(stopped * 10 <= static_cast<int>(a.size() + b.size()));
  REQUIRE(a.size() >= 50);
  REQUIRE(b.size() >= 50);
  CHECK(test::ks_two_sample(a, b).p_value > 0.01);
}

TEST_CASE("M estimate") {
  const auto& f = fixture(0.25);
  const MEstimate m = estimate_M(f.law, f.table, 256, 20, 3);
  CHECK(m.size == static_cast<std::int64_t>(std::floor(256 / std::log(256.0))));
  double harmonic = 0.0;
  for (std::int64_t i = 1; i <= m.size; ++i) harmonic += 1.0 / static_cast<double>(i);
  CHECK(m.M >= harmonic);
  CHECK(m.sums.size() == 20);
  CHECK(m.M == upper_quantile(m.sums, 5.0 / 6.0));
  // scaling every capacity up scales every summand down
  std::vector<double> scaled = m.sums;
  for (double& s : scaled) s /= 1.5;
  CHECK(upper_quantile(scaled, 5.0 / 6.0) <= m.M);
  const Site D = threshold_from_formula(0.25, 256, m.M, f.law.char_fn_leading_coefficient());
  MESSAGE("D / n^{1/alpha} = " << to_double(D) / std::pow(256.0, 4.0));
  CHECK(to_double(D) >= std::pow(256.0, 4.0));
  CHECK_THROWS(estimate_M(f.law, f.table, 256, 19, 3));
}

TEST_CASE("empirical quantile") {
  // sup{t : #{x < t}/R < p}
  CHECK(upper_quantile({1, 2, 3, 4, 5, 6}, 5.0 / 6.0) == 5);
  CHECK(upper_quantile({1, 2, 3, 4, 5, 6, 7}, 5.0 / 6.0) == 6);
  CHECK(upper_quantile({3, 1, 2}, 0.5) == 2);
  CHECK(upper_quantile({9}, 0.1) == 9);
}

TEST_CASE("few splits before the M scale at the formula threshold") {
  // P(no split before min(2M, tau(n / log n))) >= 1/2
  const auto& f = fixture(0.25);
  const std::int64_t n = 256;
  const MEstimate m = estimate_M(f.law, f.table, n, 20, 11);
  const Site D = threshold_from_formula(0.25, n, m.M, f.law.char_fn_leading_coefficient());
  int clean = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const SdlaResult r = sdla_run(f.law, f.table, n, 1, D, derive_seed(500, seed));
    double limit = 2.0 * m.M;
    std::int64_t glued = 1;
    for (const SdlaEvent& e : r.events)
      if (e.component == 0 && ++glued == m.size) {
        limit = std::min(limit, e.event.t);
        break;
      }
    if (!r.beta_q || *r.beta_q > limit) ++clean;
  }
  MESSAGE("runs without an early split: " << clean << " of 50");
  CHECK(clean >= 25);
}
