// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>

#include "dense.hpp"
#include "ldla/harness.hpp"
#include "ldla/hitting.hpp"
#include "ldla/sdla.hpp"
#include "stats.hpp"
#include "tables.hpp"

using namespace ldla;
using test::fixture;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::string checks_detail(const ExperimentResult& r) {
  std::string s;
  for (const Check& c : r.checks) s += (s.empty() ? "" : "; ") + c.name + " " + c.detail + (c.passed ? "" : " [fail]");
  return s;
}

// Exact capacity increment identity on random sets.
Outcome escape_identity() {
  Rng rng(101);
  int bad = 0, cases = 0;
  double worst = 0.0;
  for (double alpha : {0.25, 0.5, 0.75}) {
    const GreenTable& t = fixture(alpha).table;
    for (int rep = 0; rep < 100; ++rep, ++cases) {
      const std::size_t size = 1 + rng.below(50);
      const std::int64_t spread = static_cast<std::int64_t>(size) + static_cast<std::int64_t>(rng.below(2000));
      std::set<Site> s;
      while (s.size() < size) s.insert(static_cast<Site>(rng.below(2 * spread + 1)) - spread);
      const std::vector<Site> A(s.begin(), s.end());
      Site x;
      do x = static_cast<Site>(rng.below(4 * spread + 1)) - 2 * spread; while (s.count(x));
      std::vector<Site> Ax = A;
      Ax.push_back(x);
      // dense oracle
      const Eigen::VectorXd w = test::dense_equilibrium(t, A);
      const Eigen::VectorXd wx = test::dense_equilibrium(t, Ax);
      const double capa = w.sum(), capa_x = wx.sum();
      const double E = 1.0 - test::dense_hit(t, A, w, x);
      const double E2 = wx(static_cast<Eigen::Index>(A.size()));
      const double delta = capa_x - capa;
      // library incremental path
      PotentialState st(t, A);
      const double e_lib = st.escape_outside(x);
      const double d_lib = st.extend(x);
      const double err = std::max(std::fabs(delta - E * E2), std::fabs(d_lib - e_lib * st.w().back())) / capa_x;
      worst = std::max(worst, err);
      const bool ok = err <= 1e-8 && delta >= E2 * E2 * (1 - 1e-9) && delta <= E * E * (1 + 1e-9) &&
                      std::fabs(d_lib - delta) <= 1e-8 * capa_x;
      if (!ok) ++bad;
    }
  }
  return {bad == 0, fmt("%.0f cases, %.0f violations, worst relative error %.2e", cases, bad, worst)};
}

// Equilibrium potential is flat on A and no other charge does better.
Outcome variational() {
  Rng rng(202);
  double worst_flat = 0.0, best_ratio = 0.0;
  int beaten = 0;
  for (double alpha : {0.25, 0.5, 0.75}) {
    const GreenTable& t = fixture(alpha).table;
    std::set<Site> s;
    while (s.size() < 40) s.insert(static_cast<Site>(rng.below(401)) - 200);
    const PotentialState st(t, {s.begin(), s.end()});
    const auto& pts = st.points();
    for (Site a : pts) {
      double v = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i) v += t(a - pts[i]) * st.w()[i] / st.capacity();
      worst_flat = std::max(worst_flat, std::fabs(v - 1.0 / st.capacity()));
    }
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> psi(pts.size());
      double total = 0.0;
      for (double& p : psi) total += (p = rng.uniform() * rng.uniform() + 1e-4);
      double top = 0.0;
      for (Site a : pts) {
        double v = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) v += t(a - pts[i]) * psi[i] / total;
        top = std::max(top, v);
      }
      const double ratio = (1.0 / top) / st.capacity();
      best_ratio = std::max(best_ratio, ratio);
      if (ratio > 1.0 + 1e-12) ++beaten;
    }
  }
  return {worst_flat <= 1e-9 && beaten == 0,
          fmt("max |psi0*G - 1/capa| = %.2e, best competitor 1/max(psi*G) / capa = %.6f, beaten %.0f times",
              worst_flat, best_ratio, beaten)};
}

Outcome interval_scaling() {
  bool ok = true;
  std::string d;
  for (double alpha : {0.25, 0.5, 0.75}) {
    const GreenTable& t = fixture(alpha).table;
    std::vector<std::pair<double, double>> series;
    for (int n = 16; n <= 4096; n *= 2) {
      std::vector<Site> pts;
      for (int i = 0; i <= n; ++i) pts.push_back(i);
      PotentialOptions o;
      o.cap = pts.size();
      series.emplace_back(n, PotentialState(t, pts, o).capacity());
    }
    const ExponentFit f = fit_exponent(series);
    ok = ok && std::fabs(f.slope - (1.0 - alpha)) <= 0.1;
    d += fmt("alpha=%.2f slope %.4f (target %.2f); ", alpha, f.slope, 1.0 - alpha);
  }
  return {ok, d};
}

Outcome cantor() {
  ExperimentConfig c;
  c.alphas = {0.5};
  c.level_max = 8;
  const ExperimentResult r = exp_cantor(c);
  const double lo = r.find(0.5, 8, "c_lower")->value, hi = r.find(0.5, 8, "C_upper")->value;
  return {r.passed() && lo > 0.0 && std::isfinite(hi), fmt("levels 1-8: c = %.4f, C = %.4f", lo, hi)};
}

Outcome gluing_law() {
  const auto& f = fixture(0.5);
  const PotentialState one(f.table, {0});
  Rng rng(505);
  const int N = 100000;
  std::map<long, double> counts;
  for (int i = 0; i < N; ++i) counts[static_cast<long>(sample_gluing(one, f.law, rng).second)] += 1;
  std::vector<double> obs, exp;
  double rest_o = N, rest_e = N;
  for (long x = -100; x <= 100; ++x) {
    if (x == 0) continue;
    const double e = N * f.law.pmf(x) * (f.table.at0() - f.table(x));
    if (e < 20) continue;
    obs.push_back(counts[x]);
    exp.push_back(e);
    rest_o -= counts[x];
    rest_e -= e;
  }
  obs.push_back(rest_o);
  exp.push_back(rest_e);
  const auto chi = test::chi_square(obs, exp);

  const PotentialState three(f.table, {-3, 0, 7});
  const HarmonicMeasure h = harmonic_measure(three);
  std::vector<double> parents(3, 0.0);
  for (int i = 0; i < N; ++i) parents[three.index_of(sample_gluing(three, f.law, rng).first)] += 1;
  double worst_z = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double p = h.weights[i];
    worst_z = std::max(worst_z, std::fabs(parents[i] / N - p) / std::sqrt(p * (1 - p) / N));
  }
  return {chi.p_value > 0.01 && worst_z <= 3.0,
          fmt("chi-square %.1f on %.0f dof, p = %.3f; parent marginal max |z| = %.2f", chi.statistic, chi.dof,
              chi.p_value, worst_z)};
}

Outcome harmonic() {
  ExperimentConfig c;
  c.alphas = {0.5};
  c.set = {-3, 0, 7};
  c.starts = {100000};
  c.walks = 400000;
  const ExperimentResult r = exp_harmonic(c);
  const ResultRow* d = r.find(0.5, 100000, "hit_sup_distance");
  const ResultRow* hits = r.find(0.5, 100000, "hits");
  if (!d || !hits) return {false, "no hits recorded"};
  return {r.passed() && d->value <= 0.05,
          fmt("y = 1e5: sup distance %.4f over %.0f hits (bound 0.05)", d->value, hits->value)};
}

Outcome hgpi() {
  const auto& f = fixture(0.5);
  HittingParams p;
  p.n_walks = 100000;
  p.seed = 707;
  const HgpiReport rep = hgpi_check(f.law, f.table, {0, 5}, 37, p);
  bool ok = rep.all_within();
  std::string d;
  for (const HgpiEntry& e : rep.entries) {
    ok = ok && e.within;
    d += fmt("a=%.0f direct %.5f predicted %.5f z %.2f; ", static_cast<double>(e.a), e.direct, e.predicted, e.z_score);
  }
  return {ok, d};
}

Outcome scaling(double alpha) {
  ExperimentConfig c;
  c.alphas = {alpha};
  c.n_max = 512;
  c.runs = 20;
  c.seed = 1;
  const ExperimentResult r = exp_scaling(c);
  return {r.passed(), checks_detail(r)};
}

Outcome coupling() {
  ExperimentConfig c;
  c.alphas = {0.25};
  c.n_max = 256;
  c.runs = 100;
  c.q_max = 8;
  c.seed = 1;
  const ExperimentResult r = exp_coupling(c);
  const ResultRow* f = r.find(0.25, 256, "interaction_frequency");
  const ResultRow* b = r.find(0.25, 256, "born_fraction");
  return {r.passed(), checks_detail(r) + fmt("; born fraction %.4f, CP upper %.4f", b->value, f->hi)};
}

Outcome determinism() {
  ExperimentConfig c;
  c.alphas = {0.25};
  c.n_max = 64;
  c.runs = 8;
  c.fit_min = 8;
  c.seed = 12;
  const std::string a = to_csv(exp_scaling(c));
  c.threads = 4;
  const std::string b = to_csv(exp_scaling(c));
  ExperimentConfig k = c;
  k.runs = 12;
  k.q_max = 4;
  k.threads = 1;
  const std::string ca = to_csv(exp_coupling(k));
  k.threads = 3;
  const std::string cb = to_csv(exp_coupling(k));
  ExperimentConfig h;
  h.alphas = {0.5};
  h.starts = {1000};
  h.walks = 3000;
  const std::string ha = to_csv(exp_harmonic(h));
  h.threads = 2;
  const std::string hb = to_csv(exp_harmonic(h));
  const bool ok = a == b && ca == cb && ha == hb;
  return {ok, fmt("scaling %.0f bytes, coupling %.0f bytes, harmonic %.0f bytes; identical across thread counts: %.0f",
                  static_cast<double>(a.size()), static_cast<double>(ca.size()), static_cast<double>(ha.size()), ok)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 capacity increment identity", escape_identity},
      {"2 equilibrium and variational consistency", variational},
      {"3 interval capacity scaling", interval_scaling},
      {"4 Cantor capacity band", cantor},
      {"5 gluing law", gluing_law},
      {"6 harmonic measure from far away", harmonic},
      {"7 hitting identity cross-check", hgpi},
      {"8 scaling alpha=0.25", [] { return scaling(0.25); }},
      {"9 scaling alpha=0.5", [] { return scaling(0.5); }},
      {"10 coupling interaction rarity", coupling},
      {"11 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::printf("%s criterion %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
