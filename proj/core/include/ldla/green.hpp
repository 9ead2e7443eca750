#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ldla/rng.hpp"
#include "ldla/site.hpp"
#include "ldla/steplaw.hpp"

namespace ldla {

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GreenOptions {
  std::int64_t x_cache = std::int64_t{1} << 16;
  double quad_tolerance = 1e-9;
  // Cosine-transform grid has 2^grid_log2 midpoints on (0, pi).
  int grid_log2 = 22;
  // Number of cached entries re-derived by adaptive quadrature at build time.
  int verify_points = 6;
};

/// G(x) for |x| <= x_cache, and A_G |x|^{alpha-1} beyond.
class GreenTable {
 public:
  GreenTable() = default;

  double alpha() const noexcept { return alpha_; }
  std::int64_t x_cache() const noexcept { return x_cache_; }
  std::int64_t table_cutoff() const noexcept { return table_cutoff_; }
  double quad_tolerance() const noexcept { return quad_tolerance_; }
  double asym_coeff() const noexcept { return asym_coeff_; }

  // Diagnostics of the top-decade fit and the band of G(x)|x|^{1-alpha}
  // over 1 <= |x| <= x_cache.
  double fit_slope() const noexcept { return fit_slope_; }
  double fit_residual_sd() const noexcept { return fit_residual_sd_; }
  std::pair<double, double> band() const noexcept { return band_; }
  double boundary_jump() const noexcept { return boundary_jump_; }
  double verify_error() const noexcept { return verify_error_; }

  double at0() const noexcept { return values_[0]; }
  const std::vector<double>& values() const noexcept { return values_; }

  double operator()(Site x) const noexcept {
    const Site m = site_abs(x);
    if (m <= x_cache_) return values_[static_cast<std::size_t>(m)];
    return far(to_double(m));
  }
  /// Asymptotic branch only; m > 0.
  double far(double m) const noexcept;

  /// FNV-1a over the parameters and raw values, as 16 hex digits.
  std::string fingerprint() const;

  void save(std::ostream& out) const;
  static GreenTable load(std::istream& in);

 private:
  friend GreenTable build_table(const StepLaw&, const GreenOptions&);
  void finalize();

  double alpha_ = 0.0;
  std::int64_t x_cache_ = 0;
  std::int64_t table_cutoff_ = 0;
  double quad_tolerance_ = 0.0;
  double asym_coeff_ = 0.0;
  double log_asym_coeff_ = 0.0;
  double fit_slope_ = 0.0;
  double fit_residual_sd_ = 0.0;
  std::pair<double, double> band_{0.0, 0.0};
  double boundary_jump_ = 0.0;
  double verify_error_ = 0.0;
  std::vector<double> values_;
};

inline double green(const GreenTable& table, Site x) noexcept { return table(x); }

/// (1/2pi) int cos(theta x) / (1 - phi(theta)) over [-pi, pi], by adaptive
/// Gauss-Kronrod. Throws QuadratureError if the error budget is not met.
double green_quadrature(const StepLaw& law, Site x, double tolerance = 1e-9);

GreenTable build_table(const StepLaw& law, const GreenOptions& options);
inline GreenTable build_table(const StepLaw& law, std::int64_t x_cache) {
  GreenOptions options;
  options.x_cache = x_cache;
  return build_table(law, options);
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const noexcept { return lo <= v && v <= hi; }
  double width() const noexcept { return hi - lo; }
};

struct GreenEstimate {
  Interval interval;
  double mean = 0.0;
  double std_error = 0.0;
  double horizon_bias = 0.0;
};

/// Visit counting from 0 over walks of t_max steps.
GreenEstimate mc_green_estimate(const StepLaw& law, const GreenTable& table, Site x,
                                std::int64_t n_walks, std::int64_t t_max, Rng& rng);

}  // namespace ldla
