#include "ldla/special.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ldla {
namespace {

// B_{2m} / (2m)! for m = 1..10.
constexpr std::array<double, 10> kBernoulliOverFactorial = {
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40320.0,
    5.0 / 66.0 / 3628800.0,
    -691.0 / 2730.0 / 479001600.0,
    7.0 / 6.0 / 87178291200.0,
    -3617.0 / 510.0 / 20922789888000.0,
    43867.0 / 798.0 / 6402373705728000.0,
    -174611.0 / 330.0 / 2432902008176640000.0,
};

// Euler-Maclaurin tail: sum_{j >= n} j^{-s}.
double em_tail(double s, double n) {
  const double log_n = std::log(n);
  double result = std::exp((1.0 - s) * log_n) / (s - 1.0) + 0.5 * std::exp(-s * log_n);
  // rising factorial s (s+1) ... (s+2m-2) times n^{-s-2m+1}
  double rising = s;
  double power = std::exp((-s - 1.0) * log_n);
  const double inv_n2 = 1.0 / (n * n);
  for (std::size_t m = 0; m < kBernoulliOverFactorial.size(); ++m) {
    double term = kBernoulliOverFactorial[m] * rising * power;
    result += term;
    if (std::fabs(term) < 1e-20 * std::fabs(result)) break;
    rising *= (s + 2.0 * m + 1.0) * (s + 2.0 * m + 2.0);
    power *= inv_n2;
  }
  return result;
}

}  // namespace

double hurwitz_zeta(double s, double k) {
  if (!(k >= 1.0)) throw std::domain_error("hurwitz_zeta: k must be >= 1");
  if (s == 1.0) throw std::domain_error("hurwitz_zeta: pole at s = 1");
  constexpr double kStart = 32.0;
  if (k >= kStart) return em_tail(s, k);
  CompensatedSum acc;
  // Small terms first.
  acc.add(em_tail(s, kStart));
  for (double j = kStart - 1.0; j >= k; j -= 1.0) acc.add(std::pow(j, -s));
  return acc.value();
}

double riemann_zeta(double s) {
  if (s == 1.0) throw std::domain_error("riemann_zeta: pole at s = 1");
  if (s > 0.0) return hurwitz_zeta(s, 1.0);
  if (s == 0.0) return -0.5;
  // zeta(s) = 2^s pi^{s-1} sin(pi s / 2) Gamma(1-s) zeta(1-s)
  const double sine = std::sin(std::numbers::pi * s / 2.0);
  if (sine == 0.0) return 0.0;  // trivial zeros
  const double log_mag = s * std::numbers::ln2 + (s - 1.0) * std::log(std::numbers::pi) +
                         std::lgamma(1.0 - s) + std::log(std::fabs(hurwitz_zeta(1.0 - s, 1.0)));
  return std::copysign(std::exp(log_mag), sine);
}

}  // namespace ldla
