#include <cmath>

#include "doctest.h"
#include "ldla/hitting.hpp"
#include "tables.hpp"

using namespace ldla;
using test::fixture;

TEST_CASE("hit probability brackets the last-exit value") {
  const auto& f = fixture(0.5);
  const PotentialState s(f.table, {-3, 0, 7});
  HittingParams p;
  p.n_walks = 20000;
  p.seed = 4;
  for (Site y : {20, 10000}) {
    const HittingResult h = mc_hitting(f.law, s, y, p);
    CHECK(h.walks == p.n_walks);
    CHECK(h.hits + h.escaped + h.unresolved == h.walks);
    const double exact = s.hit_probability(y);
    INFO("y = " << static_cast<long>(y) << " exact " << exact << " mc " << h.hit_mean << " se " << h.std_error);
    CHECK(h.hit_prob.contains(exact));
    CHECK(std::fabs(h.hit_mean - exact) <= 3.0 * h.std_error + h.eps_escape);
  }
}

TEST_CASE("symmetric pair splits evenly") {
  const auto& f = fixture(0.5);
  const PotentialState s(f.table, {-5, 5});
  HittingParams p;
  p.n_walks = 20000;
  p.seed = 8;
  const HittingResult h = mc_hitting(f.law, s, 0, p);
  const auto d = h.hit_distribution();
  CHECK(std::fabs(d[0] - 0.5) <= 3.0 * std::sqrt(0.25 / static_cast<double>(h.hits)));
}

TEST_CASE("results do not depend on the thread count") {
  const auto& f = fixture(0.5);
  const PotentialState s(f.table, {-3, 0, 7});
  HittingParams p;
  p.n_walks = 6000;
  p.chunk = 512;
  p.seed = 99;
  const HittingResult a = mc_hitting(f.law, s, 100, p);
  p.threads = 3;
  const HittingResult b = mc_hitting(f.law, s, 100, p);
  CHECK(a.hits == b.hits);
  CHECK(a.steps == b.steps);
  CHECK(a.hit_counts == b.hit_counts);
  CHECK(a.last_counts == b.last_counts);
}

TEST_CASE("single point: return probability") {
  const auto& f = fixture(0.5);
  HittingParams p;
  p.n_walks = 20000;
  p.seed = 12;
  p.start_in_set = true;
  const HittingResult h = mc_hitting(f.law, f.table, {0}, 0, p);
  // P(return to 0) = 1 - 1/G(0)
  const double ret = 1.0 - 1.0 / f.table.at0();
  CHECK(std::fabs(h.hit_mean - ret) <= 3.0 * h.std_error + h.eps_escape);

  HittingParams q;
  q.n_walks = 10000;
  q.seed = 3;
  const HgpiReport rep = hgpi_check(f.law, f.table, {0}, 9, q);
  REQUIRE(rep.columns.size() == 1);
  CHECK(rep.columns[0].within);
  CHECK(rep.columns[0].w == doctest::Approx(1.0 / f.table.at0()));
  for (double s : rep.pi_row_sums) CHECK(s <= 1.0);
}

TEST_CASE("hitting identity on a two-point set") {
  const auto& f = fixture(0.5);
  HittingParams p;
  p.n_walks = 10000;
  p.seed = 21;
  const HgpiReport rep = hgpi_check(f.law, f.table, {0, 5}, 37, p);
  for (const HgpiEntry& e : rep.entries) CHECK(e.within);
  for (const HgpiColumn& c : rep.columns) CHECK(c.within);
  for (double s : rep.pi_row_sums) CHECK(s <= 1.0);
}
