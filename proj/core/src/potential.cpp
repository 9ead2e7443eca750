#include "ldla/potential.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "ldla/special.hpp"

namespace ldla {

PotentialState::PotentialState(const GreenTable& table, const std::vector<Site>& points, PotentialOptions options)
    : table_(&table), options_(options) {
  if (points.empty()) throw std::invalid_argument("solve_equilibrium: empty point set");
  if (points.size() > options_.cap)
    throw std::length_error("solve_equilibrium: " + std::to_string(points.size()) + " points exceed the cap of " +
                            std::to_string(options_.cap));
  points_.reserve(points.size());
  for (Site p : points) {
    if (index_.count(p)) throw std::invalid_argument("solve_equilibrium: duplicate point " + to_string(p));
    add_point(p);
  }
  refactor();
}

PotentialState::PotentialState(const PotentialState& o)
    : table_(o.table_),
      options_(o.options_),
      points_(o.points_),
      index_(o.index_),
      min_(o.min_),
      max_(o.max_),
      kernel_(o.kernel_),
      factor_(o.factor_),
      y_(o.y_),
      w_(o.w_),
      capacity_(o.capacity_),
      residual_(o.residual_),
      since_refactor_(o.since_refactor_),
      refactors_(o.refactors_),
      indefinite_(o.indefinite_),
      clamps_(o.clamp_count()) {}

PotentialState& PotentialState::operator=(const PotentialState& o) {
  if (this != &o) {
    PotentialState copy(o);
    *this = std::move(copy);
  }
  return *this;
}

PotentialState::PotentialState(PotentialState&& o) noexcept
    : table_(o.table_),
      options_(o.options_),
      points_(std::move(o.points_)),
      index_(std::move(o.index_)),
      min_(o.min_),
      max_(o.max_),
      kernel_(std::move(o.kernel_)),
      factor_(std::move(o.factor_)),
      y_(std::move(o.y_)),
      w_(std::move(o.w_)),
      capacity_(o.capacity_),
      residual_(o.residual_),
      since_refactor_(o.since_refactor_),
      refactors_(o.refactors_),
      indefinite_(o.indefinite_),
      clamps_(o.clamp_count()) {}

PotentialState& PotentialState::operator=(PotentialState&& o) noexcept {
  table_ = o.table_;
  options_ = o.options_;
  points_ = std::move(o.points_);
  index_ = std::move(o.index_);
  min_ = o.min_;
  max_ = o.max_;
  kernel_ = std::move(o.kernel_);
  factor_ = std::move(o.factor_);
  y_ = std::move(o.y_);
  w_ = std::move(o.w_);
  capacity_ = o.capacity_;
  residual_ = o.residual_;
  since_refactor_ = o.since_refactor_;
  refactors_ = o.refactors_;
  indefinite_ = o.indefinite_;
  clamps_.store(o.clamp_count(), std::memory_order_relaxed);
  return *this;
}

PotentialState::~PotentialState() = default;

std::size_t PotentialState::index_of(Site x) const {
  auto it = index_.find(x);
  if (it == index_.end()) throw std::out_of_range("point " + to_string(x) + " not in set");
  return it->second;
}

void PotentialState::add_point(Site x) {
  const std::size_t n = points_.size();
  if (n == 0) {
    min_ = max_ = x;
  } else {
    min_ = std::min(min_, x);
    max_ = std::max(max_, x);
  }
  for (std::size_t j = 0; j < n; ++j) kernel_.push_back((*table_)(x - points_[j]));
  kernel_.push_back(table_->at0());
  index_.emplace(x, n);
  points_.push_back(x);
}

void PotentialState::refactor() {
  const auto n = static_cast<Eigen::Index>(points_.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = kernel_[packed(static_cast<std::size_t>(i), static_cast<std::size_t>(j))];
      k(i, j) = v;
      k(j, i) = v;
    }
  ++refactors_;
  since_refactor_ = 0;

  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() == Eigen::Success && !indefinite_) {
    const Eigen::MatrixXd l = llt.matrixL();
    factor_.resize(kernel_.size());
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j <= i; ++j)
        factor_[packed(static_cast<std::size_t>(i), static_cast<std::size_t>(j))] = l(i, j);
    solve_from_factor();
  } else {
    indefinite_ = true;
    factor_.clear();
    y_.clear();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(k);
    const Eigen::VectorXd sol = ldlt.solve(Eigen::VectorXd::Ones(n));
    if (ldlt.info() != Eigen::Success || !sol.allFinite())
      throw NumericalBreach("solve_equilibrium: singular Green kernel");
    w_.assign(sol.data(), sol.data() + n);
    CompensatedSum cap;
    for (double v : w_) cap.add(v);
    capacity_ = cap.value();
  }
  update_residual();
  if (!(residual_ <= options_.residual_limit))
    throw NumericalBreach("solve_equilibrium: residual " + std::to_string(residual_) + " after factorization");
}

void PotentialState::solve_from_factor() {
  const std::size_t n = points_.size();
  y_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = &factor_[packed(i, 0)];
    double s = 1.0;
    for (std::size_t j = 0; j < i; ++j) s -= row[j] * y_[j];
    y_[i] = s / row[i];
  }
  // w = L^{-T} y, column sweep over the rows of L.
  w_ = y_;
  for (std::size_t i = n; i-- > 0;) {
    const double* row = &factor_[packed(i, 0)];
    w_[i] /= row[i];
    const double wi = w_[i];
    for (std::size_t j = 0; j < i; ++j) w_[j] -= row[j] * wi;
  }
  CompensatedSum cap;
  for (double v : w_) cap.add(v);
  capacity_ = cap.value();
}

void PotentialState::update_residual() {
  const std::size_t n = points_.size();
  std::vector<double> r(n, -1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = &kernel_[packed(i, 0)];
    double s = row[i] * w_[i];
    const double wi = w_[i];
    for (std::size_t j = 0; j < i; ++j) {
      s += row[j] * w_[j];
      r[j] += row[j] * wi;
    }
    r[i] += s;
  }
  double m = 0.0;
  for (double v : r) m = std::max(m, std::fabs(v));
  residual_ = m;
}

double PotentialState::hit_probability(Site y) const noexcept {
  double s = 0.0;
  const std::size_t n = points_.size();
  for (std::size_t i = 0; i < n; ++i) s += (*table_)(y - points_[i]) * w_[i];
  return s;
}

double PotentialState::escape_outside(Site x) const {
  if (contains(x)) throw std::invalid_argument("escape_outside: " + to_string(x) + " is in the set");
  const double e = 1.0 - hit_probability(x);
  if (e >= 0.0 && e <= 1.0) return e;
  const double tol = options_.clamp_tolerance;
  if (e < 0.0 && e >= -tol) {
    clamps_.fetch_add(1, std::memory_order_relaxed);
    return 0.0;
  }
  if (e > 1.0 && e <= 1.0 + tol) {
    clamps_.fetch_add(1, std::memory_order_relaxed);
    return 1.0;
  }
  throw NumericalBreach("escape_outside: value " + std::to_string(e) + " at " + to_string(x));
}

double PotentialState::extend(Site x) {
  if (contains(x)) throw std::invalid_argument("extend: " + to_string(x) + " already present");
  if (points_.size() >= options_.cap)
    throw std::length_error("extend: cap of " + std::to_string(options_.cap) + " points reached");
  const double before = capacity_;
  const double escape = escape_outside(x);

  const std::size_t n = points_.size();
  add_point(x);
  bool need_refactor = indefinite_;
  if (!need_refactor) {
    const double* g = &kernel_[packed(n, 0)];
    std::vector<double> l(n);
    double ll = 0.0, ly = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = &factor_[packed(i, 0)];
      double s = g[i];
      for (std::size_t j = 0; j < i; ++j) s -= row[j] * l[j];
      l[i] = s / row[i];
      ll += l[i] * l[i];
      ly += l[i] * y_[i];
    }
    const double d2 = table_->at0() - ll;
    if (d2 > 0.0) {
      const double d = std::sqrt(d2);
      factor_.insert(factor_.end(), l.begin(), l.end());
      factor_.push_back(d);
      y_.push_back((1.0 - ly) / d);
      w_ = y_;
      for (std::size_t i = n + 1; i-- > 0;) {
        const double* row = &factor_[packed(i, 0)];
        w_[i] /= row[i];
        const double wi = w_[i];
        for (std::size_t j = 0; j < i; ++j) w_[j] -= row[j] * wi;
      }
      CompensatedSum cap;
      for (double v : w_) cap.add(v);
      capacity_ = cap.value();
      update_residual();
      ++since_refactor_;
      need_refactor = residual_ > options_.residual_limit || since_refactor_ >= options_.refactor_every;
    } else {
      need_refactor = true;
    }
  }
  if (need_refactor) refactor();

  const double delta = capacity_ - before;
  const double expected = escape * w_[n];
  if (std::fabs(delta - expected) > options_.identity_tolerance * capacity_)
    throw NumericalBreach("extend: capacity increment " + std::to_string(delta) + " disagrees with E E' = " +
                          std::to_string(expected));
  return delta;
}

std::pair<PotentialState, double> PotentialState::extended(Site x) const {
  PotentialState next(*this);
  const double delta = next.extend(x);
  return {std::move(next), delta};
}

HarmonicMeasure harmonic_measure(const PotentialState& state) {
  HarmonicMeasure h;
  h.points = state.points();
  h.weights.reserve(state.size());
  for (double v : state.w()) h.weights.push_back(v / state.capacity());
  return h;
}

double gluing_measure(const PotentialState& state, const StepLaw& law, Site x, Site a) {
  if (!state.contains(a)) throw std::invalid_argument("gluing_measure: " + to_string(a) + " not in the set");
  if (state.contains(x)) throw std::invalid_argument("gluing_measure: " + to_string(x) + " is in the set");
  return law.pmf(a - x) * state.escape_outside(x) / state.capacity();
}

Interval gluing_mass(const PotentialState& state, const StepLaw& law, std::int64_t window) {
  if (window < 1) throw std::invalid_argument("gluing_mass: window must be positive");
  const Site lo = state.min_point() - window;
  const Site hi = state.max_point() + window;
  if (hi - lo > Site{200'000'000}) throw std::invalid_argument("gluing_mass: explicit range too large");
  const auto& pts = state.points();
  CompensatedSum inner;
  for (Site x = lo; x <= hi; ++x) {
    if (state.contains(x)) continue;
    double p = 0.0;
    for (Site a : pts) p += law.pmf(a - x);
    inner.add(p * state.escape_outside(x));
  }
  // Steps from a to the right of hi or to the left of lo.
  CompensatedSum outer;
  for (Site a : pts) {
    outer.add(0.5 * law.tail(hi + 1 - a));
    outer.add(0.5 * law.tail(a - lo + 1));
  }
  // Outside the window the escape deficit sum pmf(a - x) h(x) is bracketed
  // through b d^{alpha-1} <= G(d) <= B d^{alpha-1} for d > window, with
  // h(x) between capa G(distance to the far end) and capa G(distance to the
  // near end). Each side then sums like capa b' / (2 zeta u) over u >= U.
  const GreenTable& g = state.table();
  const double capa = state.capacity();
  double B = g.asym_coeff(), b = g.asym_coeff();
  for (std::int64_t d = window + 1; d <= g.x_cache(); ++d) {
    const double v = g.values()[static_cast<std::size_t>(d)] * std::pow(static_cast<double>(d), 1.0 - g.alpha());
    B = std::max(B, v);
    b = std::min(b, v);
  }
  const double diam = to_double(state.diameter());
  const double shrink = std::pow(1.0 + diam / static_cast<double>(window), g.alpha() - 1.0);
  double deficit_hi = 0.0, deficit_lo = 0.0;
  for (Site a : pts) {
    const double right = to_double(hi + 1 - a), left = to_double(a - lo + 1);
    deficit_hi += capa * B / (2.0 * law.zeta_norm()) * (1.0 / (right - 1.0) + 1.0 / (left - 1.0));
    deficit_lo += capa * b * shrink / (2.0 * law.zeta_norm()) * (1.0 / right + 1.0 / left);
  }
  deficit_hi = std::min(deficit_hi, outer.value());
  deficit_lo = std::min(deficit_lo, deficit_hi);
  // Allowance for the tolerance of the tabulated G.
  const double slack = g.quad_tolerance();
  return {(inner.value() + outer.value() - deficit_hi) / capa - slack,
          (inner.value() + outer.value() - deficit_lo) / capa + slack};
}

std::vector<Site> cantor_set(int level) {
  if (level < 0 || level > 16) throw std::invalid_argument("cantor_set: level must lie in [0, 16]");
  std::vector<Site> out{0};
  Site scale = 1;
  for (int k = 0; k < level; ++k) {
    const std::size_t m = out.size();
    for (std::size_t i = 0; i < m; ++i) out.push_back(out[i] + 2 * scale);
    scale *= 3;
  }
  return out;
}

std::vector<Site> progression(std::int64_t d, std::int64_t m) {
  if (d < 1 || m < 0) throw std::invalid_argument("progression: need d >= 1 and m >= 0");
  std::vector<Site> out;
  out.reserve(static_cast<std::size_t>(m) + 1);
  for (std::int64_t i = 0; i <= m; ++i) out.push_back(static_cast<Site>(d) * i);
  return out;
}

}  // namespace ldla
