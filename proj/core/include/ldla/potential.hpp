#pragma once

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ldla/green.hpp"
#include "ldla/site.hpp"
#include "ldla/steplaw.hpp"

namespace ldla {

class NumericalBreach : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PotentialOptions {
  std::size_t cap = 4096;
  double residual_limit = 1e-9;
  int refactor_every = 256;
  // Relative tolerance for capa(A + x) - capa(A) = E_A(x) E_{A+x}(x).
  double identity_tolerance = 1e-8;
  double clamp_tolerance = 1e-8;
};

/// Finite set A with the Cholesky factor of G_A = [G(a - b)] and the
/// solution w of G_A w = 1. w(a) is the escape probability E_A(a) and
/// capacity = sum w.
///
/// Holds a pointer to the Green table, which must outlive the state.
/// Single writer; const members may run concurrently.
class PotentialState {
 public:
  PotentialState(const GreenTable& table, const std::vector<Site>& points, PotentialOptions options = {});
  PotentialState(const PotentialState& other);
  PotentialState& operator=(const PotentialState& other);
  PotentialState(PotentialState&&) noexcept;
  PotentialState& operator=(PotentialState&&) noexcept;
  ~PotentialState();

  const GreenTable& table() const noexcept { return *table_; }
  const PotentialOptions& options() const noexcept { return options_; }

  std::size_t size() const noexcept { return points_.size(); }
  const std::vector<Site>& points() const noexcept { return points_; }
  const std::vector<double>& w() const noexcept { return w_; }
  double capacity() const noexcept { return capacity_; }
  double residual() const noexcept { return residual_; }
  Site min_point() const noexcept { return min_; }
  Site max_point() const noexcept { return max_; }
  Site diameter() const noexcept { return max_ - min_; }

  bool contains(Site x) const { return index_.count(x) != 0; }
  /// Position of x in points(); throws std::out_of_range if absent.
  std::size_t index_of(Site x) const;

  /// sum_a G(y - a) w(a): probability that the walk from y ever visits A
  /// (equal to 1 on A).
  double hit_probability(Site y) const noexcept;

  /// E_A(x) = 1 - hit_probability(x) for x outside A. Round-off excursions
  /// below 0 or above 1 of at most clamp_tolerance are clamped and counted.
  double escape_outside(Site x) const;

  /// Adds x; returns capa(A + x) - capa(A).
  double extend(Site x);
  std::pair<PotentialState, double> extended(Site x) const;

  std::uint64_t clamp_count() const noexcept { return clamps_.load(std::memory_order_relaxed); }
  std::uint64_t refactor_count() const noexcept { return refactors_; }
  /// True once the Cholesky factorization has failed and the state switched
  /// to a symmetric-indefinite solve.
  bool indefinite_fallback() const noexcept { return indefinite_; }

 private:
  std::size_t packed(std::size_t i, std::size_t j) const noexcept { return i * (i + 1) / 2 + j; }
  void add_point(Site x);
  void refactor();
  void solve_from_factor();
  void update_residual();

  const GreenTable* table_;
  PotentialOptions options_;
  std::vector<Site> points_;
  std::unordered_map<Site, std::size_t, SiteHash> index_;
  Site min_ = 0, max_ = 0;
  // Packed lower triangles, row-major: entry (i, j <= i) at i (i + 1)/2 + j.
  std::vector<double> kernel_;
  std::vector<double> factor_;
  std::vector<double> y_;  // factor^{-1} 1
  std::vector<double> w_;
  double capacity_ = 0.0;
  double residual_ = 0.0;
  int since_refactor_ = 0;
  std::uint64_t refactors_ = 0;
  bool indefinite_ = false;
  mutable std::atomic<std::uint64_t> clamps_{0};
};

inline PotentialState solve_equilibrium(const GreenTable& table, const std::vector<Site>& points,
                                        PotentialOptions options = {}) {
  return PotentialState(table, points, options);
}

struct HarmonicMeasure {
  std::vector<Site> points;
  std::vector<double> weights;
};

HarmonicMeasure harmonic_measure(const PotentialState& state);

/// mu(x, a) = pmf(a - x) E_A(x) / capa(A).
double gluing_measure(const PotentialState& state, const StepLaw& law, Site x, Site a);

/// Total mass of mu, with |x - A| <= window summed explicitly and the rest
/// bracketed through the step tail and the decay of G.
Interval gluing_mass(const PotentialState& state, const StepLaw& law, std::int64_t window = 1'000'000);

/// { i in [0, 3^level) : no base-3 digit equals 1 }.
std::vector<Site> cantor_set(int level);

/// d {0, ..., m}.
std::vector<Site> progression(std::int64_t d, std::int64_t m);

}  // namespace ldla
