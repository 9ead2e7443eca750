#include <cmath>
#include <sstream>

#include "doctest.h"
#include "ldla/green.hpp"
#include "tables.hpp"

using namespace ldla;
using test::fixture;

TEST_CASE("quadrature is symmetric and peaks at 0") {
  const StepLaw law(0.5);
  const double g0 = green_quadrature(law, 0);
  for (Site x : {1, 2, 7, 100, 3000}) {
    const double g = green_quadrature(law, x);
    CHECK(g == doctest::Approx(green_quadrature(law, -x)).epsilon(1e-12));
    CHECK(g < g0);
  }
}

TEST_CASE("cached table agrees with independent quadrature") {
  for (double alpha : {0.25, 0.5, 0.75}) {
    const auto& f = fixture(alpha);
    for (Site x : {0, 1, 2, 3, 10, 123, 4567, 40000, 65536}) {
      const double q = green_quadrature(f.law, x, 1e-10);
      CHECK(std::fabs(f.table(x) - q) <= 5e-9);
    }
  }
}

TEST_CASE("last-exit identity: sum_x pmf(x) G(x) = G(0) - 1") {
  for (double alpha : {0.25, 0.5, 0.75}) {
    const auto& f = fixture(alpha);
    const std::int64_t X = f.table.x_cache();
    double s = 0.0;
    for (std::int64_t x = 1; x <= X; ++x) s += 2.0 * f.law.pmf(x) * f.table(x);
    // beyond the cache: pmf(x) A_G x^{alpha-1}, summed by its integral
    s += f.table.asym_coeff() / f.law.zeta_norm() / (static_cast<double>(X) + 0.5);
    CHECK(s == doctest::Approx(f.table.at0() - 1.0).epsilon(1e-6));
  }
}

TEST_CASE("power-law decay of the table") {
  for (double alpha : {0.25, 0.5, 0.75}) {
    const auto& f = fixture(alpha);
    CHECK(std::fabs(f.table.fit_slope() - (alpha - 1.0)) <= 0.05);
    const auto [c, C] = f.table.band();
    CHECK(c > 0.0);
    CHECK(std::isfinite(C));
    for (std::int64_t x = 1; x <= f.table.x_cache(); x += 997) {
      const double v = f.table(x) * std::pow(static_cast<double>(x), 1.0 - alpha);
      CHECK(v >= c);
      CHECK(v <= C);
    }
  }
}

TEST_CASE("lookup branches") {
  const auto& f = fixture(0.5);
  const GreenTable& t = f.table;
  CHECK(green(t, 0) == t.at0());
  CHECK(t(5) == t(-5));
  const Site X = t.x_cache();
  CHECK(std::fabs(t(X + 1) / t(X) - 1.0) < 0.02);
  const Site big = static_cast<Site>(1e30);
  const double g = t(big);
  CHECK(std::isfinite(g));
  CHECK(g > 0.0);
  CHECK(g == doctest::Approx(t.asym_coeff() * std::pow(1e30, -0.5)).epsilon(1e-12));
}

TEST_CASE("save and load round trip") {
  const auto& f = fixture(0.75);
  std::stringstream ss;
  f.table.save(ss);
  const GreenTable back = GreenTable::load(ss);
  CHECK(back.fingerprint() == f.table.fingerprint());
  CHECK(back.values() == f.table.values());
  CHECK(back.asym_coeff() == f.table.asym_coeff());
  std::stringstream bad("not a table\n");
  CHECK_THROWS(GreenTable::load(bad));
}

TEST_CASE("build rejects bad options") {
  const StepLaw law(0.5);
  GreenOptions o;
  o.x_cache = 10;
  CHECK_THROWS_AS(build_table(law, o), std::invalid_argument);
}

TEST_CASE("Monte Carlo visit counts bracket the table") {
  const auto& f = fixture(0.5);
  Rng rng(2024);
  for (Site x : {0, 1, 5, 50}) {
    const GreenEstimate e = mc_green_estimate(f.law, f.table, x, 10000, 10000, rng);
    INFO("x = " << static_cast<long>(x) << " mean " << e.mean << " se " << e.std_error);
    CHECK(e.interval.contains(f.table(x)));
  }
  // standard error shrinks with more walks
  Rng r1(5), r2(5);
  const GreenEstimate small = mc_green_estimate(f.law, f.table, 0, 1000, 2000, r1);
  const GreenEstimate large = mc_green_estimate(f.law, f.table, 0, 16000, 2000, r2);
  CHECK(large.std_error < small.std_error);
  // far target: the horizon is too short to reach it
  Rng r3(9);
  const Site far = static_cast<Site>(1e9);
  const GreenEstimate e = mc_green_estimate(f.law, f.table, far, 2000, 100, r3);
  CHECK(e.interval.lo <= 2.0 * f.table(far));
}
