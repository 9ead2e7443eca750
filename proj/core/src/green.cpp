#include "ldla/green.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <memory>
#include <numbers>
#include <ostream>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ldla/special.hpp"

namespace ldla {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr const char* kMagic = "ldla-green-table";
constexpr int kFormatVersion = 1;

// Re sum_{k >= 1} k^{alpha-1} e^{ik theta} for 0 < theta <= pi. Its cosine
// coefficients are |x|^{alpha-1}/2 exactly, and it carries the same
// theta^{-alpha} singularity as 1/(1 - phi).
class PowerCosineSeries {
 public:
  explicit PowerCosineSeries(double alpha) : alpha_(alpha) {
    const double c = std::cos(kPi * alpha / 2.0);
    singular_ = std::tgamma(alpha) * c;
    constant_ = riemann_zeta(1.0 - alpha);
    for (int j = 1; j < 200; ++j) {
      const double z = 1.0 - alpha - 2.0 * j;
      const double log_d = z * std::numbers::ln2 + (z - 1.0) * std::log(kPi) + std::log(c) +
                           std::lgamma(2.0 * j + alpha) + std::log(hurwitz_zeta(2.0 * j + alpha, 1.0)) -
                           std::lgamma(2.0 * j + 1.0);
      coeffs_.push_back(std::exp(log_d));
      if (log_d + 2.0 * j * std::log(kPi) < std::log(1e-24)) break;
    }
  }

  double singular() const noexcept { return singular_; }

  double operator()(double theta) const noexcept {
    const double t2 = theta * theta;
    double even = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) even = even * t2 + *it;
    return singular_ * std::pow(theta, -alpha_) + constant_ + even * t2;
  }

 private:
  double alpha_;
  double singular_ = 0.0;
  double constant_ = 0.0;
  std::vector<double> coeffs_;
};

struct FftwDeleter {
  void operator()(double* p) const noexcept { fftw_free(p); }
};

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Bisection on a 31-point Gauss-Kronrod pair. The pair is always applied on
// [-1, 1] so that its error estimate is on the same scale as the value.
template <class F>
double adaptive_gauss_kronrod(F&& f, double a, double b, double abs_tol, int depth, double& error,
                              std::int64_t& evals) {
  const double mid = 0.5 * (a + b);
  const double scale = 0.5 * (b - a);
  double local = 0.0;
  const double value =
      scale * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                  [&](double t) { return f(mid + scale * t); }, -1.0, 1.0, 0, 0.0, &local);
  evals += 31;
  local *= std::fabs(scale);
  if (local <= abs_tol || depth == 0) {
    error += local;
    return value;
  }
  return adaptive_gauss_kronrod(f, a, mid, 0.5 * abs_tol, depth - 1, error, evals) +
         adaptive_gauss_kronrod(f, mid, b, 0.5 * abs_tol, depth - 1, error, evals);
}

}  // namespace

double GreenTable::far(double m) const noexcept {
  return std::exp(log_asym_coeff_ + (alpha_ - 1.0) * std::log(m));
}

void GreenTable::finalize() {
  const auto x = static_cast<std::size_t>(x_cache_);
  const double slope = alpha_ - 1.0;

  // Coefficient with the slope pinned at alpha - 1, over the top decade.
  const std::size_t lo = std::max<std::size_t>(1, x / 10);
  double sum = 0.0, sum2 = 0.0;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double count = static_cast<double>(x - lo + 1);
  for (std::size_t i = lo; i <= x; ++i) {
    const double lx = std::log(static_cast<double>(i));
    const double ly = std::log(values_[i]);
    const double r = ly - slope * lx;
    sum += r;
    sum2 += r * r;
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  log_asym_coeff_ = sum / count;
  asym_coeff_ = std::exp(log_asym_coeff_);
  fit_residual_sd_ = std::sqrt(std::max(0.0, sum2 / count - log_asym_coeff_ * log_asym_coeff_));
  fit_slope_ = (count * sxy - sx * sy) / (count * sxx - sx * sx);

  double band_lo = INFINITY, band_hi = 0.0;
  for (std::size_t i = 1; i <= x; ++i) {
    const double v = values_[i] * std::pow(static_cast<double>(i), -slope);
    band_lo = std::min(band_lo, v);
    band_hi = std::max(band_hi, v);
  }
  band_ = {band_lo, band_hi};

  boundary_jump_ = std::fabs(far(static_cast<double>(x_cache_ + 1)) / values_[x] - 1.0);
}

std::string GreenTable::fingerprint() const {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  h = fnv1a(h, &alpha_, sizeof alpha_);
  h = fnv1a(h, &x_cache_, sizeof x_cache_);
  h = fnv1a(h, &table_cutoff_, sizeof table_cutoff_);
  h = fnv1a(h, &quad_tolerance_, sizeof quad_tolerance_);
  h = fnv1a(h, values_.data(), values_.size() * sizeof(double));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void GreenTable::save(std::ostream& out) const {
  auto old = out.precision(17);
  out << kMagic << ' ' << kFormatVersion << '\n'
      << "alpha " << alpha_ << '\n'
      << "x_cache " << x_cache_ << '\n'
      << "table_cutoff " << table_cutoff_ << '\n'
      << "quad_tolerance " << quad_tolerance_ << '\n'
      << "asym_coeff " << asym_coeff_ << '\n'
      << "verify_error " << verify_error_ << '\n'
      << "fingerprint " << fingerprint() << '\n'
      << "values\n";
  for (double v : values_) out << v << '\n';
  out.precision(old);
}

GreenTable GreenTable::load(std::istream& in) {
  auto fail = [](const std::string& what) -> GreenTable { throw std::runtime_error("green table: " + what); };
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != kMagic) return fail("bad magic");
  if (version != kFormatVersion) return fail("unsupported version " + std::to_string(version));
  GreenTable t;
  double stored_coeff = 0.0;
  std::string stored_fp;
  auto expect = [&](const char* key) {
    if (!(in >> word) || word != key) throw std::runtime_error(std::string("green table: expected ") + key);
  };
  expect("alpha");
  in >> t.alpha_;
  expect("x_cache");
  in >> t.x_cache_;
  expect("table_cutoff");
  in >> t.table_cutoff_;
  expect("quad_tolerance");
  in >> t.quad_tolerance_;
  expect("asym_coeff");
  in >> stored_coeff;
  expect("verify_error");
  in >> t.verify_error_;
  expect("fingerprint");
  in >> stored_fp;
  expect("values");
  if (!in || t.x_cache_ < 1) return fail("malformed header");
  t.values_.resize(static_cast<std::size_t>(t.x_cache_) + 1);
  for (double& v : t.values_)
    if (!(in >> v)) return fail("truncated values");
  t.finalize();
  if (t.fingerprint() != stored_fp) return fail("fingerprint mismatch");
  if (std::fabs(t.asym_coeff_ / stored_coeff - 1.0) > 1e-12) return fail("asymptotic coefficient mismatch");
  return t;
}

double green_quadrature(const StepLaw& law, Site x, double tolerance) {
  constexpr std::int64_t kEvalBudget = 200'000'000;

  const double alpha = law.alpha();
  const double xd = to_double(site_abs(x));
  const double head = std::min(kPi, kPi / (xd + 1.0));
  const double panels = std::ceil((kPi - head) / head);
  if (panels * 31.0 * 4.0 > static_cast<double>(kEvalBudget))
    throw QuadratureError("green_quadrature: |x| too large for the evaluation budget");

  std::int64_t evals = 0;
  double total_error = 0.0;
  CompensatedSum acc;
  // Share of the absolute budget for each panel, on the scale of the theta integral.
  const double panel_tol = 0.25 * tolerance * kPi / (panels + 1.0);

  // theta = t^p with p = 1/(1 - alpha) removes the theta^{-alpha} blow-up.
  const double p = 1.0 / (1.0 - alpha);
  acc.add(adaptive_gauss_kronrod(
      [&](double t) {
        const double theta = std::pow(t, p);
        return p * std::pow(t, p - 1.0) * std::cos(xd * theta) / law.one_minus_char_fn(theta);
      },
      0.0, std::pow(head, 1.0 / p), panel_tol, 40, total_error, evals));

  auto integrand = [&](double theta) { return std::cos(xd * theta) / law.one_minus_char_fn(theta); };
  const auto n = static_cast<std::int64_t>(panels);
  for (std::int64_t i = 0; i < n; ++i) {
    const double a = head + static_cast<double>(i) * (kPi - head) / panels;
    const double b = i + 1 == n ? kPi : head + static_cast<double>(i + 1) * (kPi - head) / panels;
    acc.add(adaptive_gauss_kronrod(integrand, a, b, panel_tol, 20, total_error, evals));
    if (evals > kEvalBudget) throw QuadratureError("green_quadrature: evaluation budget exhausted");
  }
  const double value = acc.value() / kPi;
  if (!(total_error / kPi <= tolerance) || !std::isfinite(value))
    throw QuadratureError("green_quadrature: subdivision did not reach tolerance");
  return value;
}

GreenTable build_table(const StepLaw& law, const GreenOptions& options) {
  if (options.x_cache < 1024) throw std::invalid_argument("build_table: x_cache must be at least 2^10");
  const std::size_t m = std::size_t{1} << options.grid_log2;
  if (m < 8 * static_cast<std::size_t>(options.x_cache))
    throw std::invalid_argument("build_table: transform grid too coarse for x_cache");

  const double alpha = law.alpha();
  const PowerCosineSeries u(alpha);
  // 1/(1 - phi) - lambda u is bounded near 0: lambda matches the leading terms.
  const double lambda = 1.0 / (law.char_fn_leading_coefficient() * u.singular());

  std::unique_ptr<double, FftwDeleter> in(fftw_alloc_real(m));
  std::unique_ptr<double, FftwDeleter> out(fftw_alloc_real(m));
  if (!in || !out) throw std::bad_alloc();
  fftw_plan plan = fftw_plan_r2r_1d(static_cast<int>(m), in.get(), out.get(), FFTW_REDFT10, FFTW_ESTIMATE);
  for (std::size_t j = 0; j < m; ++j) {
    const double theta = kPi * (static_cast<double>(j) + 0.5) / static_cast<double>(m);
    in.get()[j] = 1.0 / law.one_minus_char_fn(theta) - lambda * u(theta);
  }
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  GreenTable t;
  t.alpha_ = alpha;
  t.x_cache_ = options.x_cache;
  t.table_cutoff_ = law.table_cutoff();
  t.quad_tolerance_ = options.quad_tolerance;
  t.values_.resize(static_cast<std::size_t>(options.x_cache) + 1);
  const double scale = 1.0 / (2.0 * static_cast<double>(m));
  t.values_[0] = out.get()[0] * scale;
  for (std::size_t k = 1; k < t.values_.size(); ++k)
    t.values_[k] = out.get()[k] * scale + 0.5 * lambda * std::pow(static_cast<double>(k), alpha - 1.0);

  for (std::size_t k = 1; k < t.values_.size(); ++k)
    if (!(t.values_[k] > 0.0 && t.values_[k] <= t.values_[0]))
      throw std::runtime_error("build_table: Green values not in (0, G(0)] at x = " + std::to_string(k));
  if (!(t.values_[0] >= 1.0)) throw std::runtime_error("build_table: G(0) < 1");

  // Independent route for a few entries.
  const std::int64_t probes[] = {0, 1, 5, 50, 1000, options.x_cache};
  const int n_probes = std::clamp(options.verify_points, 0, static_cast<int>(std::size(probes)));
  for (int i = 0; i < n_probes; ++i) {
    const auto k = static_cast<std::size_t>(probes[i]);
    const double q = green_quadrature(law, static_cast<Site>(k), options.quad_tolerance);
    t.verify_error_ = std::max(t.verify_error_, std::fabs(q - t.values_[k]));
  }
  if (t.verify_error_ > 2.0 * options.quad_tolerance)
    throw QuadratureError("build_table: transform and quadrature disagree by " + std::to_string(t.verify_error_));

  t.finalize();
  if (t.boundary_jump_ >= 0.02)
    throw std::runtime_error("build_table: asymptotic branch discontinuous at the cache boundary");
  return t;
}

GreenEstimate mc_green_estimate(const StepLaw& law, const GreenTable& table, Site x, std::int64_t n_walks,
                                std::int64_t t_max, Rng& rng) {
  if (n_walks < 1000) throw std::invalid_argument("mc_green_estimate: need at least 1000 walks");
  CompensatedSum sum, sum2;
  std::vector<double> distance(static_cast<std::size_t>(n_walks));
  for (std::int64_t w = 0; w < n_walks; ++w) {
    Site pos = 0;
    double visits = x == 0 ? 1.0 : 0.0;
    bool gone = false;
    for (std::int64_t t = 0; t < t_max; ++t) {
      auto step = law.try_sample_step(rng);
      if (!step) {
        gone = true;
        break;
      }
      pos += *step;
      if (pos == x) visits += 1.0;
    }
    sum.add(visits);
    sum2.add(visits * visits);
    distance[static_cast<std::size_t>(w)] = gone ? INFINITY : to_double(site_abs(pos - x));
  }
  const double n = static_cast<double>(n_walks);
  GreenEstimate e;
  e.mean = sum.value() / n;
  const double var = std::max(0.0, (sum2.value() - n * e.mean * e.mean) / (n - 1.0));
  e.std_error = std::sqrt(var / n);
  const auto q = static_cast<std::size_t>(0.1 * n);
  std::nth_element(distance.begin(), distance.begin() + static_cast<std::ptrdiff_t>(q), distance.end());
  const double m = distance[q];
  e.horizon_bias = m >= 1.0 ? table.asym_coeff() * std::pow(m, table.alpha() - 1.0) : table.at0();
  e.interval.lo = e.mean - 3.0 * e.std_error;
  e.interval.hi = e.interval.lo + 6.0 * e.std_error + e.horizon_bias;
  return e;
}

}  // namespace ldla
