#include "ldla/steplaw.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ldla/special.hpp"

namespace ldla {
namespace {

constexpr std::size_t kGuideBuckets = std::size_t{1} << 14;
constexpr double kMaxMagnitude = 0x1.0p96;

}  // namespace

StepLaw::StepLaw(double alpha, std::int64_t table_cutoff)
    : alpha_(alpha), exponent_(1.0 + alpha), table_cutoff_(table_cutoff) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("StepLaw: alpha must lie in (0, 1)");
  if (table_cutoff < 16) throw std::invalid_argument("StepLaw: table cutoff must be at least 16");

  const auto k0 = static_cast<std::size_t>(table_cutoff);

  // Unnormalised tails, accumulated from the small end.
  std::vector<double> raw(k0 + 2, 0.0);
  CompensatedSum acc;
  acc.add(hurwitz_zeta(exponent_, static_cast<double>(k0 + 1)));
  raw[k0 + 1] = acc.value();
  for (std::size_t k = k0; k >= 1; --k) {
    acc.add(std::pow(static_cast<double>(k), -exponent_));
    raw[k] = acc.value();
  }
  zeta_ = raw[1];

  tail_.assign(k0 + 2, 0.0);
  for (std::size_t k = 1; k <= k0 + 1; ++k) tail_[k] = raw[k] / zeta_;
  tail_[1] = 1.0;

  cdf_.assign(k0 + 1, 0.0);
  for (std::size_t k = 1; k <= k0; ++k) cdf_[k] = 1.0 - tail_[k + 1];

  guide_.assign(kGuideBuckets, static_cast<std::int32_t>(k0 + 1));
  std::size_t k = 1;
  for (std::size_t i = 0; i < kGuideBuckets; ++i) {
    const double level = static_cast<double>(i) / static_cast<double>(kGuideBuckets);
    while (k <= k0 && cdf_[k] <= level) ++k;
    guide_[i] = static_cast<std::int32_t>(k);
  }

  // t^alpha P(|X| > t) on [k-1, k) peaks as t -> k, where P(|X| > t) = tail(k).
  // Beyond the table k^alpha tail(k) keeps decreasing towards 1/(alpha zeta).
  double sup = 0.0;
  for (std::size_t j = 2; j <= k0 + 1; ++j)
    sup = std::max(sup, std::pow(static_cast<double>(j), alpha_) * tail_[j]);
  tail_constant_ = sup;
  tail_band_ = {1.0 / (alpha_ * zeta_), 1.0};

  // Real part of the polylogarithm expansion of sum_k k^{-s} e^{ik theta}
  // around theta = 0; convergent for |theta| < 2 pi.
  const double half_angle_cos = std::cos(std::numbers::pi * alpha_ / 2.0);
  singular_coeff_ = std::tgamma(-alpha_) * half_angle_cos;
  char_leading_ = -singular_coeff_ / zeta_;
  for (int j = 1; j < 200; ++j) {
    const double z = exponent_ - 2.0 * j;
    const double log_c = z * std::numbers::ln2 + (z - 1.0) * std::log(std::numbers::pi) +
                         std::log(half_angle_cos) + std::lgamma(2.0 * j - alpha_) +
                         std::log(hurwitz_zeta(2.0 * j - alpha_, 1.0)) - std::lgamma(2.0 * j + 1.0);
    even_coeffs_.push_back(std::exp(log_c));
    if (log_c + 2.0 * j * std::log(std::numbers::pi) < std::log(1e-24)) break;
  }
}

double StepLaw::pmf(Site x) const noexcept {
  if (x == 0) return 0.0;
  return std::pow(to_double(site_abs(x)), -exponent_) / (2.0 * zeta_);
}

double StepLaw::tail(Site k) const {
  if (k < 1) throw std::domain_error("StepLaw::tail: k must be >= 1");
  if (k <= static_cast<Site>(table_cutoff_) + 1) return tail_[static_cast<std::size_t>(k)];
  return hurwitz_zeta(exponent_, to_double(k)) / zeta_;
}

double StepLaw::one_minus_char_fn(double theta) const noexcept {
  double t = std::fabs(std::remainder(theta, 2.0 * std::numbers::pi));
  if (t == 0.0) return 0.0;
  const double t2 = t * t;
  double even = 0.0;
  for (auto it = even_coeffs_.rbegin(); it != even_coeffs_.rend(); ++it) even = even * t2 + *it;
  even *= t2;
  return -(singular_coeff_ * std::pow(t, alpha_) + even) / zeta_;
}

std::optional<Site> StepLaw::sample_magnitude(double v, Rng& rng) const {
  const auto k0 = static_cast<std::size_t>(table_cutoff_);
  if (v < cdf_[k0]) {
    const auto bucket = static_cast<std::size_t>(v * kGuideBuckets);
    const auto lo = static_cast<std::size_t>(guide_[bucket]);
    const std::size_t hi = bucket + 1 < kGuideBuckets ? static_cast<std::size_t>(guide_[bucket + 1]) : k0;
    if (cdf_[lo] > v) return static_cast<Site>(lo);
    // Smallest k in (lo, hi] with cdf_[k] > v.
    const auto it = std::upper_bound(cdf_.begin() + static_cast<std::ptrdiff_t>(lo) + 1,
                                     cdf_.begin() + static_cast<std::ptrdiff_t>(std::min(hi, k0)) + 1, v);
    return static_cast<Site>(it - cdf_.begin());
  }
  // |X| > K0: continuous Pareto envelope y^{-1-alpha} on [K0, inf), rounded
  // up, accepted with the exact ratio k^{-s} / int_{k-1}^{k} y^{-s} dy.
  const double base = static_cast<double>(table_cutoff_);
  for (;;) {
    const double y = base * std::exp(-std::log(rng.uniform_open()) / alpha_);
    if (!(y <= kMaxMagnitude)) return std::nullopt;
    const double kd = std::ceil(y);
    if (kd <= base) continue;
    const double ratio = alpha_ / (kd * std::expm1(-alpha_ * std::log1p(-1.0 / kd)));
    if (rng.uniform() >= ratio) continue;
    if (kd < 0x1.0p53) return static_cast<Site>(kd);
    // Above 2^53 consecutive doubles are ulp apart; spread uniformly over the
    // integers that round to kd (the envelope is flat to 2^-52 on that scale).
    const double ulp = kd - std::nextafter(kd, 0.0);
    const auto spread = static_cast<std::uint64_t>(ulp);
    return static_cast<Site>(kd) - static_cast<Site>(rng.below(spread));
  }
}

std::optional<Site> StepLaw::try_sample_step(Rng& rng) const {
  // The top 53 bits drive the magnitude, the lowest bit the sign.
  const std::uint64_t bits = rng.bits();
  auto magnitude = sample_magnitude(static_cast<double>(bits >> 11) * 0x1.0p-53, rng);
  if (!magnitude) return std::nullopt;
  return (bits & 1) ? *magnitude : -*magnitude;
}

Site StepLaw::sample_step(Rng& rng) const {
  auto step = try_sample_step(rng);
  if (!step) throw StepOverflowError("sampled step magnitude exceeds 2^96");
  return *step;
}

}  // namespace ldla
