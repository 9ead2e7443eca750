#include <algorithm>
#include <cmath>
#include <memory>
#include <unordered_set>

#include "ldla/sdla.hpp"

namespace ldla {
namespace {

using SiteSet = std::unordered_set<Site, SiteHash>;

constexpr const char* kPathHitsHat = "T_S_hits_S_hat";
constexpr const char* kHatPathHitsS = "T_hat_hits_S";

struct Labelling {
  CouplingReport report;
  bool active = true;  // born and not yet interacted
  SiteSet s_points;
  std::unique_ptr<PotentialState> s_state;
  std::unique_ptr<PotentialState> hat_state;
  SiteSet t_s;    // trajectories of walks from S
  SiteSet t_hat;  // trajectories of walks from S_hat
};

struct PathResult {
  std::vector<Site> points;
  double truncation = 0.0;
  bool budget_exceeded = false;
};

// Walk from x conditioned never to visit A: propose from the step law and
// accept z with probability E_A(z).
PathResult conditioned_path(const PotentialState& a, const StepLaw& law, Site x, Rng& rng, double eps,
                            std::int64_t budget) {
  PathResult out;
  out.points.push_back(x);
  Site pos = x;
  double h = a.hit_probability(pos);
  for (std::int64_t k = 0; h >= eps; ++k) {
    if (k >= budget) {
      out.budget_exceeded = true;
      out.truncation += h;
      return out;
    }
    auto step = law.try_sample_step(rng);
    if (!step) return out;
    const Site z = pos + *step;
    if (a.contains(z)) continue;
    const double hz = a.hit_probability(z);
    if (rng.uniform() < 1.0 - hz) {
      pos = z;
      h = hz;
      out.points.push_back(z);
    }
  }
  out.truncation += h;
  return out;
}

}  // namespace

std::vector<CouplingReport> coupled_run(const StepLaw& law, const GreenTable& table, std::int64_t n, Site D,
                                        std::uint64_t seed, const CouplingOptions& options) {
  if (options.q_max < 1) throw std::invalid_argument("coupled_run: q_max must be at least 1");
  if (D < 0) throw std::invalid_argument("coupled_run: D must be nonnegative");
  if (n < 1 || static_cast<std::size_t>(n) > options.potential.cap)
    throw std::invalid_argument("coupled_run: bad target size");

  Aggregate agg(law, table, derive_seed(seed, 0), options.potential);
  Rng aux(derive_seed(seed, 1));
  std::vector<int> colour{0};
  SiteSet all_paths{0};
  double truncation = 0.0;
  bool budget_exceeded = false;
  std::int64_t splits = 0;

  std::vector<Labelling> labels(static_cast<std::size_t>(options.q_max));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    CouplingReport& r = labels[i].report;
    r.n = n;
    r.q = static_cast<std::int64_t>(i) + 1;
    r.D = D;
    r.seed = seed;
    labels[i].active = false;
  }

  auto interact = [](Labelling& l, double t, const char* kind) {
    l.active = false;
    l.report.equal_at_tau = false;
    l.report.first_interaction = Interaction{t, kind};
    if (l.s_state) {
      l.report.s_size = static_cast<std::int64_t>(l.s_state->size());
      l.report.s_hat_size = static_cast<std::int64_t>(l.hat_state->size());
    }
  };

  double t = 0.0;
  while (static_cast<std::int64_t>(agg.n()) < n) {
    PotentialState& a_state = agg.potential();
    const Proposal p = draw_proposal(a_state, law, agg.rng());
    t += p.dt;
    const Site x = p.target;
    const bool large = site_abs(p.step) > D;
    const bool x_in_a = a_state.contains(x);
    double u = 1.0;
    if (!x_in_a) u = agg.rng().uniform();
    const bool accept = !x_in_a && u < a_state.escape_outside(x);

    Labelling* newborn = nullptr;
    if (large) {
      ++splits;
      if (splits <= options.q_max) newborn = &labels[static_cast<std::size_t>(splits - 1)];
    }

    // Labellings born earlier: compare the DLA decision with the component's.
    for (Labelling& l : labels) {
      if (!l.active || &l == newborn) continue;
      const bool from_s = l.s_points.count(p.parent) != 0;
      if (from_s && large && !l.report.zeta_q) l.report.zeta_q = t;
      const PotentialState& own = from_s ? *l.s_state : *l.hat_state;
      const char* kind = from_s ? kPathHitsHat : kHatPathHitsS;
      if (own.contains(x)) continue;
      if (x_in_a) {
        // x lies in the other component: the component keeps the walk alive
        // with probability E_own(x), and its trajectory then touches the other one.
        if (aux.uniform() < own.escape_outside(x)) interact(l, t, kind);
      } else if (!accept) {
        // The walk returns to A. Under the same uniform the component's own
        // walk escapes it, so the DLA walk must have met the other component.
        if (u < own.escape_outside(x)) interact(l, t, kind);
      }
    }

    if (newborn) {
      CouplingReport& r = newborn->report;
      r.born = true;
      r.beta_q = t;
      r.b_q = x;
      if (!accept) {
        r.equal_at_tau = false;
        r.first_interaction = Interaction{t, kPathHitsHat};
      } else {
        newborn->active = true;
        newborn->s_points.insert(x);
        newborn->s_state = std::make_unique<PotentialState>(table, std::vector<Site>{x}, options.potential);
        newborn->hat_state = std::make_unique<PotentialState>(a_state);
        newborn->t_hat = all_paths;
        r.s_trace.emplace_back(0.0, 1);
      }
    }

    if (!accept) continue;

    PathResult path = conditioned_path(a_state, law, x, aux, options.eps_path, options.path_step_budget);
    truncation += path.truncation;
    budget_exceeded = budget_exceeded || path.budget_exceeded;

    all_paths.insert(p.parent);
    all_paths.insert(path.points.begin(), path.points.end());
    const int parent_colour = colour[a_state.index_of(p.parent)];
    a_state.extend(x);
    agg.set_time(t);
    colour.push_back(newborn ? static_cast<int>(newborn->report.q) : parent_colour);

    for (Labelling& l : labels) {
      if (!l.active) continue;
      if (&l == newborn) {
        l.t_s.insert(path.points.begin(), path.points.end());
        if (l.t_hat.count(x)) interact(l, t, kHatPathHitsS);
        continue;
      }
      const bool from_s = l.s_points.count(p.parent) != 0;
      SiteSet& own_paths = from_s ? l.t_s : l.t_hat;
      own_paths.insert(p.parent);
      own_paths.insert(path.points.begin(), path.points.end());
      if (from_s) {
        l.s_points.insert(x);
        l.s_state->extend(x);
        if (!l.report.zeta_q) {
          l.report.s_trace.emplace_back(t - *l.report.beta_q, static_cast<std::int64_t>(l.s_points.size()));
          if (colour.back() != l.report.q) l.report.colour_consistent = false;
        }
        if (l.t_hat.count(x)) interact(l, t, kHatPathHitsS);
      } else {
        l.hat_state->extend(x);
        if (!l.report.zeta_q && colour.back() == l.report.q) l.report.colour_consistent = false;
        if (l.t_s.count(x)) interact(l, t, kPathHitsHat);
      }
    }
  }

  std::vector<CouplingReport> out;
  for (Labelling& l : labels) {
    CouplingReport& r = l.report;
    r.truncation_error = truncation;
    r.trajectory_budget_exceeded = budget_exceeded;
    r.end_time = t;
    if (l.active) {
      r.s_size = static_cast<std::int64_t>(l.s_state->size());
      r.s_hat_size = static_cast<std::int64_t>(l.hat_state->size());
      if (r.s_size + r.s_hat_size != static_cast<std::int64_t>(agg.n())) r.colour_consistent = false;
      for (Site s : l.s_points)
        if (!agg.potential().contains(s) || l.hat_state->contains(s)) r.colour_consistent = false;
    } else if (!r.born) {
      r.s_hat_size = static_cast<std::int64_t>(agg.n());
    }
    out.push_back(std::move(r));
  }
  return out;
}

CouplingReport coupled_run(const StepLaw& law, const GreenTable& table, std::int64_t n, std::int64_t q, Site D,
                           std::uint64_t seed, CouplingOptions options) {
  if (q < 1) throw std::invalid_argument("coupled_run: q must be at least 1");
  options.q_max = static_cast<int>(q);
  return coupled_run(law, table, n, D, seed, options).back();
}

}  // namespace ldla
