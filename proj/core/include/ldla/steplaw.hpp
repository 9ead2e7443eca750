#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ldla/rng.hpp"
#include "ldla/site.hpp"

namespace ldla {

/// Raised when a sampled step exceeds 2^96 in magnitude.
class StepOverflowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Symmetric power-law step distribution of an alpha-walk, 0 < alpha < 1:
///
///     pmf(x) = |x|^{-1-alpha} / (2 zeta(1+alpha)),   x != 0,   pmf(0) = 0.
///
/// Because pmf(x) |x|^{1+alpha} is constant, the two-sided pmf band constants
/// c = C = 1/(2 zeta(1+alpha)) are exact. The tail satisfies
/// k^alpha tail(k) in [1/(alpha zeta(1+alpha)), 1] (see tail_band()).
///
/// Immutable after construction; share freely between threads.
class StepLaw {
 public:
  static constexpr std::int64_t kDefaultTableCutoff = std::int64_t{1} << 16;

  explicit StepLaw(double alpha, std::int64_t table_cutoff = kDefaultTableCutoff);

  double alpha() const noexcept { return alpha_; }
  std::int64_t table_cutoff() const noexcept { return table_cutoff_; }

  /// zeta(1+alpha), i.e. the sum over k >= 1 of k^{-1-alpha}.
  double zeta_norm() const noexcept { return zeta_; }
  /// Normalising constant of the two-sided pmf, 2 zeta(1+alpha).
  double norm() const noexcept { return 2.0 * zeta_; }

  /// C1 = sup_{t >= 1} t^alpha P(|X| > t).
  double tail_constant() const noexcept { return tail_constant_; }

  /// Exact bounds of k^alpha tail(k) over k >= 1.
  std::pair<double, double> tail_band() const noexcept { return tail_band_; }

  /// Leading coefficient kappa of 1 - phi(theta) ~ kappa |theta|^alpha.
  double char_fn_leading_coefficient() const noexcept { return char_leading_; }

  double pmf(Site x) const noexcept;

  /// P(|X| >= k) for k >= 1.
  double tail(Site k) const;

  double char_fn(double theta) const noexcept { return 1.0 - one_minus_char_fn(theta); }

  /// 1 - phi(theta), computed without cancellation near theta = 0.
  double one_minus_char_fn(double theta) const noexcept;

  /// Exact draw. Throws StepOverflowError beyond 2^96.
  Site sample_step(Rng& rng) const;

  /// Exact draw; std::nullopt when the magnitude exceeds 2^96. Path samplers
  /// use this to treat such a jump as a departure to infinity.
  std::optional<Site> try_sample_step(Rng& rng) const;

 private:
  // v uniform on [0, 1); further uniforms only for the Pareto branch.
  std::optional<Site> sample_magnitude(double v, Rng& rng) const;

  double alpha_;
  double exponent_;  // 1 + alpha
  std::int64_t table_cutoff_;
  double zeta_ = 0.0;
  double tail_constant_ = 0.0;
  std::pair<double, double> tail_band_{0.0, 1.0};
  double char_leading_ = 0.0;

  // tail_[k] = P(|X| >= k) for k in [1, K0 + 1]; index 0 unused.
  std::vector<double> tail_;
  // cdf_[k] = P(|X| <= k) for k in [0, K0].
  std::vector<double> cdf_;
  std::vector<std::int32_t> guide_;

  // 1 - phi(theta) = -(singular_coeff_ |theta|^alpha + sum_j even_coeffs_[j] theta^{2j+2}) / zeta
  double singular_coeff_ = 0.0;
  std::vector<double> even_coeffs_;
};

}  // namespace ldla
