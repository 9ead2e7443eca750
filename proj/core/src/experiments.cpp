#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ldla/harness.hpp"
#include "ldla/hitting.hpp"
#include "ldla/parallel.hpp"
#include "ldla/sdla.hpp"

namespace ldla {
namespace {

GreenTable table_for(const StepLaw& law, const ExperimentConfig& c) {
  GreenOptions o;
  o.x_cache = c.x_cache;
  o.grid_log2 = c.grid_log2;
  return build_table(law, o);
}

// Linear-interpolation quantile of a sorted sample.
double quantile_sorted(const std::vector<double>& v, double p) {
  const double h = p * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(h));
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (h - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

void check_failures(ExperimentResult& r, double alpha, std::int64_t failed, std::int64_t runs,
                    const std::vector<std::string>& errors) {
  for (const std::string& e : errors) r.notes.push_back("alpha=" + fmt(alpha) + " excluded run: " + e);
  const auto f = static_cast<double>(failed);
  r.add(alpha, 0, "failed_runs", f, f, f, runs);
  if (10 * failed > runs)
    throw std::runtime_error(r.experiment + ": " + std::to_string(failed) + " of " + std::to_string(runs) +
                             " runs failed at alpha=" + fmt(alpha));
}

// Diameter band for the fitted growth exponent. Below 1/3 the exponent is
// 1/alpha; above it lies in [max(2, 1/alpha), 2/(alpha(2 - alpha))].
std::pair<double, double> diameter_band(double alpha) {
  if (alpha < 1.0 / 3.0) return {1.0 / alpha - 1.5, 1.0 / alpha + 1.5};
  const double upper = std::ceil((2.0 / (alpha * (2.0 - alpha)) + 0.5) * 10.0) / 10.0;
  return {std::max(2.0, 1.0 / alpha) - 0.5, upper};
}

}  // namespace

ExperimentResult exp_scaling(const ExperimentConfig& c) {
  c.validate();
  ExperimentResult r;
  r.experiment = "scaling";
  r.config = config_echo(c);
  r.notes.push_back("bands: diameter slope in [1/alpha - 1.5, 1/alpha + 1.5] and capacity slope >= 0.7 for alpha < 1/3; "
                    "diameter slope in [max(2, 1/alpha) - 0.5, 2/(alpha(2-alpha)) + 0.5] otherwise; chosen for n <= 512");
  for (double alpha : c.alphas) {
    const StepLaw law(alpha);
    const GreenTable table = table_for(law, c);
    r.fingerprints.push_back(table.fingerprint());
    DlaOptions opts;
    opts.potential.cap = std::max<std::size_t>(opts.potential.cap, static_cast<std::size_t>(c.n_max));

    struct RunOut {
      bool ok = false;
      std::string error;
      std::vector<Snapshot> snapshots;
    };
    const auto outs = parallel_map(static_cast<std::size_t>(c.runs), c.threads, [&](std::size_t i) {
      RunOut o;
      try {
        o.snapshots = dla_run(law, table, c.n_max, derive_seed(c.seed, i), opts).snapshots;
        o.ok = true;
      } catch (const std::exception& e) {
        o.error = "run " + std::to_string(i) + ": " + e.what();
      }
      return o;
    });

    std::map<std::int64_t, std::vector<double>> diam, capa;
    std::int64_t failed = 0;
    std::vector<std::string> errors;
    for (std::size_t i = 0; i < outs.size(); ++i) {
      if (!outs[i].ok) {
        ++failed;
        errors.push_back(outs[i].error);
        continue;
      }
      const auto& s = outs[i].snapshots;
      for (std::size_t k = 0; k < s.size(); ++k) {
        if (k > 0 && (s[k].diameter < s[k - 1].diameter || s[k].capacity < s[k - 1].capacity * (1.0 - 1e-12)))
          throw std::logic_error("scaling: run " + std::to_string(i) + " has a decreasing diameter or capacity");
        diam[s[k].n].push_back(to_double(s[k].diameter));
        capa[s[k].n].push_back(s[k].capacity);
      }
    }
    check_failures(r, alpha, failed, c.runs, errors);
    const std::int64_t ok = c.runs - failed;

    std::vector<std::pair<double, double>> dser, cser;
    for (auto& [n, d] : diam) {
      auto& cp = capa[n];
      std::sort(d.begin(), d.end());
      std::sort(cp.begin(), cp.end());
      const double dm = quantile_sorted(d, 0.5), cm = quantile_sorted(cp, 0.5);
      r.add(alpha, n, "diameter_median", dm, quantile_sorted(d, 0.25), quantile_sorted(d, 0.75), ok);
      r.add(alpha, n, "capacity_median", cm, quantile_sorted(cp, 0.25), quantile_sorted(cp, 0.75), ok);
      if (n >= c.fit_min && dm > 0.0) {
        dser.emplace_back(static_cast<double>(n), dm);
        cser.emplace_back(static_cast<double>(n), cm);
      }
    }
    if (dser.size() < 3) {
      r.notes.push_back("alpha=" + fmt(alpha) + ": fewer than 3 snapshots above fit_min, no fit");
      continue;
    }
    const ExponentFit fd = fit_exponent(dser), fc = fit_exponent(cser);
    r.add(alpha, c.n_max, "diameter_slope", fd.slope, fd.lo, fd.hi, ok);
    r.add(alpha, c.n_max, "capacity_slope", fc.slope, fc.lo, fc.hi, ok);
    const auto [lo, hi] = diameter_band(alpha);
    r.checks.push_back({"diameter_slope alpha=" + fmt(alpha), fd.slope >= lo && fd.slope <= hi,
                        fmt(fd.slope) + " in [" + fmt(lo) + ", " + fmt(hi) + "]"});
    if (alpha < 1.0 / 3.0)
      r.checks.push_back({"capacity_slope alpha=" + fmt(alpha), fc.slope >= 0.7, fmt(fc.slope) + " >= 0.7"});
  }
  return r;
}

ExperimentResult exp_cantor(const ExperimentConfig& c) {
  c.validate();
  ExperimentResult r;
  r.experiment = "cantor";
  r.config = config_echo(c);
  r.notes.push_back("n column is the Cantor level; the set has 2^level points");
  for (double alpha : c.alphas) {
    const StepLaw law(alpha);
    const GreenTable table = table_for(law, c);
    r.fingerprints.push_back(table.fingerprint());
    PotentialOptions opts;
    double c_low = 0.0, c_high = 0.0;
    for (int level = 0; level <= c.level_max; ++level) {
      const PotentialState s(table, cantor_set(level), opts);
      const double cap = s.capacity();
      const double bound = std::min(std::ldexp(1.0, level), std::pow(3.0, level * (1.0 - alpha)));
      const double ratio = cap / bound;
      r.add(alpha, level, "capacity", cap, cap, cap, 1);
      r.add(alpha, level, "bound", bound, bound, bound, 1);
      r.add(alpha, level, "ratio", ratio, ratio, ratio, 1);
      r.add(alpha, level, "residual", s.residual(), s.residual(), s.residual(), 1);
      if (level == 0) {
        const double single = 1.0 / table.at0();
        r.checks.push_back({"level0 alpha=" + fmt(alpha), std::fabs(cap - single) <= 1e-12 * single,
                            fmt(cap) + " vs 1/G(0) = " + fmt(single)});
        continue;
      }
      const double scaled = ratio * level;
      r.add(alpha, level, "ratio_times_level", scaled, scaled, scaled, 1);
      c_low = level == 1 ? scaled : std::min(c_low, scaled);
      c_high = level == 1 ? ratio : std::max(c_high, ratio);
    }
    if (c.level_max >= 1) {
      r.add(alpha, c.level_max, "c_lower", c_low, c_low, c_low, 1);
      r.add(alpha, c.level_max, "C_upper", c_high, c_high, c_high, 1);
      r.checks.push_back({"band alpha=" + fmt(alpha), c_low > 0.0 && std::isfinite(c_high),
                          "c = " + fmt(c_low) + ", C = " + fmt(c_high)});
    }
  }
  return r;
}

ExperimentResult exp_harmonic(const ExperimentConfig& c) {
  c.validate();
  ExperimentResult r;
  r.experiment = "harmonic";
  r.config = config_echo(c);
  for (std::size_t ai = 0; ai < c.alphas.size(); ++ai) {
    const double alpha = c.alphas[ai];
    const StepLaw law(alpha);
    const GreenTable table = table_for(law, c);
    r.fingerprints.push_back(table.fingerprint());
    const PotentialState state(table, c.set);
    const HarmonicMeasure hm = harmonic_measure(state);

    std::vector<Site> xs;  // gluing sites checked even when unobserved
    for (Site x = state.min_point() - 20; x <= state.max_point() + 20; ++x)
      if (!state.contains(x)) xs.push_back(x);

    const bool symmetric = c.set.size() == 2 && c.set[0] == -c.set[1] && c.set[0] != 0;
    double prev_d = 0.0, prev_sd = 0.0;
    for (std::size_t yi = 0; yi < c.starts.size(); ++yi) {
      const auto y = static_cast<Site>(static_cast<std::int64_t>(c.starts[yi]));
      HittingParams p;
      p.n_walks = c.walks;
      p.eps_escape = c.eps_escape;
      p.seed = derive_seed(derive_seed(c.seed, ai), yi);
      p.threads = c.threads;
      const HittingResult h = mc_hitting(law, state, y, p);
      const std::int64_t n = static_cast<std::int64_t>(c.starts[yi]);
      r.add(alpha, n, "hit_probability", h.hit_mean, std::min(h.hit_prob.lo, h.hit_mean), h.hit_prob.hi, h.walks);
      const auto hits = static_cast<double>(h.hits);
      r.add(alpha, n, "hits", hits, hits, hits, h.walks);
      if (h.hits == 0) {
        r.checks.push_back({"hits y=" + std::to_string(n), false, "no walk hit the set"});
        continue;
      }
      const std::vector<double> dist = h.hit_distribution();
      double d = 0.0, sd = 0.0;
      for (std::size_t i = 0; i < dist.size(); ++i) {
        const double w = hm.weights[state.index_of(h.points[i])];
        d = std::max(d, std::fabs(dist[i] - w));
        sd = std::max(sd, std::sqrt(w * (1.0 - w) / hits));
        if (symmetric) {
          const double s = std::sqrt(0.25 / hits);
          r.checks.push_back({"symmetric split alpha=" + fmt(alpha) + " y=" + std::to_string(n),
                              std::fabs(dist[i] - 0.5) <= 3.0 * s, fmt(dist[i]) + " vs 1/2, 3 sd = " + fmt(3.0 * s)});
        }
      }
      r.add(alpha, n, "hit_sup_distance", d, std::max(0.0, d - 3.0 * sd), d + 3.0 * sd, h.hits);

      double g = 0.0;
      auto gap = [&](Site x, Site a, std::int64_t count) {
        g = std::max(g, std::fabs(static_cast<double>(count) / hits - gluing_measure(state, law, x, a)));
      };
      for (const auto& [xa, count] : h.last_counts) gap(xa.first, xa.second, count);
      for (Site x : xs)
        for (Site a : state.points())
          if (!h.last_counts.count({x, a})) gap(x, a, 0);
      r.add(alpha, n, "gluing_sup_distance", g, std::max(0.0, g - 3.0 * sd), g + 3.0 * sd, h.hits);

      if (yi > 0)
        r.checks.push_back({"distance decreasing alpha=" + fmt(alpha) + " y=" + std::to_string(n),
                            d <= prev_d + 2.0 * std::hypot(sd, prev_sd),
                            fmt(d) + " <= " + fmt(prev_d) + " + 2 sd"});
      if (yi + 1 == c.starts.size())
        r.checks.push_back({"sup distance alpha=" + fmt(alpha) + " y=" + std::to_string(n), d <= 0.05,
                            fmt(d) + " <= 0.05 with " + std::to_string(h.hits) + " hits"});
      prev_d = d;
      prev_sd = sd;
    }
  }
  return r;
}

ExperimentResult exp_coupling(const ExperimentConfig& c) {
  c.validate();
  ExperimentResult r;
  r.experiment = "coupling";
  r.config = config_echo(c);
  r.notes.push_back("interaction_frequency counts (seed, q) pairs; unborn labellings count as no interaction");
  for (double alpha : c.alphas) {
    const bool regime = alpha < 1.0 / 3.0;
    if (!regime && !c.force)
      throw std::invalid_argument("coupling: alpha = " + fmt(alpha) +
                                  " is outside alpha < 1/3, where the split coupling is controlled; use force to run anyway");
    if (!regime) r.notes.push_back("alpha=" + fmt(alpha) + " forced outside alpha < 1/3: reported without pass/fail");
    const StepLaw law(alpha);
    const GreenTable table = table_for(law, c);
    r.fingerprints.push_back(table.fingerprint());
    const std::int64_t n = c.n_max;
    const std::int64_t q_max =
        c.q_max > 0 ? c.q_max : static_cast<std::int64_t>(std::ceil(std::log(static_cast<double>(n))));

    Site D = 0;
    if (c.D == "auto") {
      const MEstimate m = estimate_M(law, table, n, c.m_runs, derive_seed(c.seed, std::uint64_t{1} << 32), c.threads,
                                     c.quantile_p);
      D = threshold_from_formula(alpha, n, m.M, law.char_fn_leading_coefficient());
      r.add(alpha, n, "M", m.M, m.sums.front(), m.sums.back(), c.m_runs);
    } else {
      D = parse_site(c.D);
    }
    const double Dd = to_double(D);
    r.add(alpha, n, "D", Dd, Dd, Dd, 1);

    CouplingOptions opts;
    opts.q_max = static_cast<int>(q_max);
    opts.eps_path = c.eps_path;
    opts.potential.cap = std::max<std::size_t>(opts.potential.cap, static_cast<std::size_t>(n));
    struct RunOut {
      bool ok = false;
      std::string error;
      std::vector<CouplingReport> reports;
    };
    const auto outs = parallel_map(static_cast<std::size_t>(c.runs), c.threads, [&](std::size_t i) {
      RunOut o;
      try {
        o.reports = coupled_run(law, table, n, D, derive_seed(c.seed, i), opts);
        o.ok = true;
      } catch (const std::exception& e) {
        o.error = "run " + std::to_string(i) + ": " + e.what();
      }
      return o;
    });

    std::int64_t failed = 0, pairs = 0, born = 0, inter = 0, born_inter = 0, budget = 0, inconsistent = 0;
    std::vector<std::string> errors;
    std::vector<double> trunc;
    for (const RunOut& o : outs) {
      if (!o.ok) {
        ++failed;
        errors.push_back(o.error);
        continue;
      }
      trunc.push_back(o.reports.front().truncation_error);
      if (o.reports.front().trajectory_budget_exceeded) ++budget;
      for (const CouplingReport& rep : o.reports) {
        ++pairs;
        if (rep.born) ++born;
        if (rep.first_interaction) {
          ++inter;
          if (rep.born) ++born_inter;
        } else if (!rep.colour_consistent) {
          ++inconsistent;
        }
      }
    }
    check_failures(r, alpha, failed, c.runs, errors);
    const std::int64_t ok = c.runs - failed;
    double tmean = 0.0;
    for (double t : trunc) tmean += t;
    tmean /= static_cast<double>(trunc.size());
    const auto [tlo, thi] = std::minmax_element(trunc.begin(), trunc.end());

    const double freq = static_cast<double>(inter) / static_cast<double>(pairs);
    const auto [flo, fhi] = clopper_pearson(inter, pairs);
    r.add(alpha, n, "q_max", static_cast<double>(q_max), static_cast<double>(q_max), static_cast<double>(q_max), ok);
    r.add(alpha, n, "interaction_frequency", freq, flo, fhi, pairs);
    const double bf = static_cast<double>(born) / static_cast<double>(pairs);
    const auto [blo, bhi] = clopper_pearson(born, pairs);
    r.add(alpha, n, "born_fraction", bf, blo, bhi, pairs);
    if (born > 0) {
      const auto [ilo, ihi] = clopper_pearson(born_inter, born);
      r.add(alpha, n, "interaction_frequency_born", static_cast<double>(born_inter) / static_cast<double>(born), ilo,
            ihi, born);
    }
    r.add(alpha, n, "truncation_error", tmean, *tlo, *thi, ok);
    r.add(alpha, n, "frequency_plus_truncation", freq + tmean, flo + tmean, fhi + tmean, pairs);
    const auto b = static_cast<double>(budget);
    r.add(alpha, n, "budget_exceeded_runs", b, b, b, ok);
    r.checks.push_back({"colour decomposition alpha=" + fmt(alpha), inconsistent == 0,
                        std::to_string(inconsistent) + " non-interacting labellings with a broken decomposition"});
    if (regime && !c.force)
      r.checks.push_back({"interaction rarity alpha=" + fmt(alpha), freq + tmean <= 0.1,
                          fmt(freq) + " + " + fmt(tmean) + " <= 0.1 over " + std::to_string(pairs) + " pairs"});
  }
  return r;
}

}  // namespace ldla
