#include "ldla/hitting.hpp"

#include <algorithm>
#include <cmath>

#include "ldla/parallel.hpp"

namespace ldla {
namespace {

struct Chunk {
  std::int64_t walks = 0, hits = 0, escaped = 0, unresolved = 0, steps = 0;
  std::vector<std::int64_t> hit_counts;
  std::map<std::pair<Site, Site>, std::int64_t> last_counts;
};

// Distances r_in <= r_out such that hit_probability(y) >= eps whenever every
// point of A is within r_in of y, and < eps whenever all are beyond r_out:
// capa inf_{d <= r} G(d) <= hit_probability(y) <= capa sup_{d >= r} G(d).
struct EscapeShell {
  double r_in = 0.0;
  double r_out = 0.0;
};

EscapeShell escape_shell(const PotentialState& state, double eps) {
  const GreenTable& g = state.table();
  const double capa = state.capacity();
  const double x = static_cast<double>(g.x_cache());
  const auto& v = g.values();
  const double far_r = std::pow(capa * g.asym_coeff() / eps, 1.0 / (1.0 - g.alpha()));
  EscapeShell shell;

  double suffix = g.far(x + 1.0);
  if (capa * suffix >= eps) {
    shell.r_out = far_r;
  } else {
    for (std::size_t d = v.size() - 1; d >= 1; --d) {
      suffix = std::max(suffix, v[d]);
      if (capa * suffix >= eps) {
        shell.r_out = static_cast<double>(d);
        break;
      }
    }
  }

  double prefix = v[0];
  std::size_t d = 1;
  for (; d < v.size(); ++d) {
    prefix = std::min(prefix, v[d]);
    if (capa * prefix < eps) break;
  }
  shell.r_in = d == v.size() ? std::floor(far_r) : static_cast<double>(d - 1);
  shell.r_in = std::min(shell.r_in, shell.r_out);
  return shell;
}

}  // namespace

std::vector<double> HittingResult::hit_distribution() const {
  std::vector<double> out(hit_counts.size(), 0.0);
  if (hits == 0) return out;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<double>(hit_counts[i]) / static_cast<double>(hits);
  return out;
}

double HittingResult::entry_std_error(std::size_t i) const {
  const double n = static_cast<double>(walks);
  const double p = static_cast<double>(hit_counts[i]) / n;
  return std::sqrt(std::max(p * (1.0 - p), 1.0 / n) / n);
}

HittingResult mc_hitting(const StepLaw& law, const PotentialState& state, Site start, const HittingParams& params) {
  if (params.n_walks < 1) throw std::invalid_argument("mc_hitting: need at least one walk");
  if (!params.start_in_set && state.contains(start))
    throw std::invalid_argument("mc_hitting: start " + to_string(start) + " lies in the set");
  const auto& pts = state.points();
  const std::size_t m = pts.size();
  const EscapeShell shell = escape_shell(state, params.eps_escape);
  const bool small = m <= 16;

  auto find = [&](Site y) -> std::ptrdiff_t {
    if (small) {
      for (std::size_t i = 0; i < m; ++i)
        if (pts[i] == y) return static_cast<std::ptrdiff_t>(i);
      return -1;
    }
    return state.contains(y) ? static_cast<std::ptrdiff_t>(state.index_of(y)) : -1;
  };
  auto far_enough = [&](Site y) {
    if (y > state.max_point() || y < state.min_point()) {
      const double near = to_double(site_abs(y > state.max_point() ? y - state.max_point() : state.min_point() - y));
      if (near > shell.r_out) return true;
      if (near + to_double(state.diameter()) <= shell.r_in) return false;
    }
    return state.hit_probability(y) < params.eps_escape;
  };

  const auto chunk = static_cast<std::size_t>(std::max<std::int64_t>(1, params.chunk));
  const std::size_t n_chunks = (static_cast<std::size_t>(params.n_walks) + chunk - 1) / chunk;
  auto run_chunk = [&](std::size_t c) {
    Chunk out;
    out.hit_counts.assign(m, 0);
    Rng rng(derive_seed(params.seed, c));
    const std::size_t begin = c * chunk;
    const std::size_t end = std::min(static_cast<std::size_t>(params.n_walks), begin + chunk);
    for (std::size_t w = begin; w < end; ++w) {
      ++out.walks;
      Site pos = start;
      if (!params.start_in_set && far_enough(pos)) {
        ++out.escaped;
        continue;
      }
      std::int64_t steps = 0;
      for (;;) {
        if (steps >= params.step_budget) {
          ++out.unresolved;
          break;
        }
        auto step = law.try_sample_step(rng);
        ++steps;
        if (!step) {
          ++out.escaped;
          break;
        }
        const Site prev = pos;
        pos += *step;
        const auto hit = find(pos);
        if (hit >= 0) {
          ++out.hits;
          ++out.hit_counts[static_cast<std::size_t>(hit)];
          ++out.last_counts[{prev, pos}];
          break;
        }
        if (far_enough(pos)) {
          ++out.escaped;
          break;
        }
      }
      out.steps += steps;
    }
    return out;
  };
  auto chunks = parallel_map(n_chunks, params.threads, run_chunk);

  HittingResult r;
  r.points = pts;
  r.eps_escape = params.eps_escape;
  r.hit_counts.assign(m, 0);
  for (auto& c : chunks) {
    r.walks += c.walks;
    r.hits += c.hits;
    r.escaped += c.escaped;
    r.unresolved += c.unresolved;
    r.steps += c.steps;
    for (std::size_t i = 0; i < m; ++i) r.hit_counts[i] += c.hit_counts[i];
    for (auto& [k, v] : c.last_counts) r.last_counts[k] += v;
  }
  const double n = static_cast<double>(r.walks);
  r.hit_mean = static_cast<double>(r.hits) / n;
  r.std_error = std::sqrt(std::max(r.hit_mean * (1.0 - r.hit_mean), 1.0 / n) / n);
  r.hit_prob.lo = std::max(0.0, r.hit_mean - 3.0 * r.std_error);
  r.hit_prob.hi = std::min(1.0, r.hit_mean + 3.0 * r.std_error + params.eps_escape * static_cast<double>(r.escaped) / n +
                                    static_cast<double>(r.unresolved) / n);
  return r;
}

HittingResult mc_hitting(const StepLaw& law, const GreenTable& table, const std::vector<Site>& points, Site start,
                         const HittingParams& params) {
  return mc_hitting(law, PotentialState(table, points), start, params);
}

bool HgpiReport::all_within() const {
  for (const auto& e : entries)
    if (!e.within) return false;
  for (const auto& c : columns)
    if (!c.within) return false;
  return true;
}

HgpiReport hgpi_check(const StepLaw& law, const GreenTable& table, const std::vector<Site>& points, Site x,
                      const HittingParams& params) {
  const PotentialState state(table, points);
  if (state.contains(x)) throw std::invalid_argument("hgpi_check: x lies in the set");
  const std::size_t m = state.size();
  const auto& pts = state.points();

  HittingParams p = params;
  p.start_in_set = false;
  p.seed = derive_seed(params.seed, 0);
  const HittingResult direct = mc_hitting(law, state, x, p);

  HgpiReport rep;
  rep.x = x;
  rep.pi.assign(m, std::vector<double>(m, 0.0));
  std::vector<std::vector<double>> pi_var(m, std::vector<double>(m, 0.0));
  std::vector<double> row_bias(m, 0.0);
  for (std::size_t z = 0; z < m; ++z) {
    p.start_in_set = true;
    p.seed = derive_seed(params.seed, 1 + z);
    const HittingResult row = mc_hitting(law, state, pts[z], p);
    double sum = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      rep.pi[z][a] = row.entry_prob(a);
      const double se = row.entry_std_error(a);
      pi_var[z][a] = se * se;
      sum += rep.pi[z][a];
    }
    rep.pi_row_sums.push_back(sum);
    row_bias[z] = row.eps_escape * static_cast<double>(row.escaped) / static_cast<double>(row.walks) +
                  static_cast<double>(row.unresolved) / static_cast<double>(row.walks);
  }
  const double direct_bias = direct.eps_escape * static_cast<double>(direct.escaped) / static_cast<double>(direct.walks) +
                             static_cast<double>(direct.unresolved) / static_cast<double>(direct.walks);

  for (std::size_t a = 0; a < m; ++a) {
    HgpiEntry e;
    e.a = pts[a];
    e.direct = direct.entry_prob(a);
    e.direct_se = direct.entry_std_error(a);
    double pred = 0.0, var = 0.0, bias = direct_bias;
    for (std::size_t z = 0; z < m; ++z) {
      const double g = table(x - pts[z]);
      pred += g * ((z == a ? 1.0 : 0.0) - rep.pi[z][a]);
      var += g * g * pi_var[z][a];
      bias += g * row_bias[z];
    }
    e.predicted = pred;
    e.predicted_se = std::sqrt(var);
    e.bias = bias;
    const double se = std::sqrt(e.direct_se * e.direct_se + var);
    e.z_score = (e.direct - e.predicted) / se;
    e.within = std::fabs(e.direct - e.predicted) <= 3.0 * se + bias;
    rep.entries.push_back(e);

    HgpiColumn c;
    c.a = pts[a];
    double csum = 1.0, cvar = 0.0, cbias = 0.0;
    for (std::size_t z = 0; z < m; ++z) {
      csum -= rep.pi[z][a];
      cvar += pi_var[z][a];
      cbias += row_bias[z];
    }
    c.column_sum = csum;
    c.se = std::sqrt(cvar);
    c.bias = cbias;
    c.w = state.w()[a];
    c.within = std::fabs(c.column_sum - c.w) <= 3.0 * c.se + cbias;
    rep.columns.push_back(c);
  }
  return rep;
}

}  // namespace ldla
