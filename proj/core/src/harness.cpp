#include "ldla/harness.hpp"

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "ldla/dla.hpp"

namespace ldla {

using nlohmann::json;

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("config: " + what); };
  if (alphas.empty()) fail("alphas is empty");
  for (double a : alphas)
    if (!(a > 0.0 && a < 1.0)) fail("alphas must lie in (0, 1)");
  if (runs < 1) fail("runs must be at least 1");
  if (n_max < 2) fail("n_max must be at least 2");
  if (x_cache < 1024) fail("x_cache must be at least 1024");
  if (grid_log2 < 12 || grid_log2 > 28) fail("grid_log2 must lie in [12, 28]");
  if (threads < 1) fail("threads must be at least 1");
  if (fit_min < 1) fail("fit_min must be positive");
  if (level_max < 0 || level_max > 12) fail("level_max must lie in [0, 12]");
  if (set.empty()) fail("set is empty");
  if (starts.empty()) fail("starts is empty");
  for (double y : starts)
    if (!(std::fabs(y) < 1e15) || y != std::floor(y)) fail("starts must be integers");
  if (walks < 1000) fail("walks must be at least 1000");
  if (!(eps_escape > 0.0 && eps_escape < 1.0)) fail("eps_escape must lie in (0, 1)");
  if (q_max < 0) fail("q_max must be nonnegative");
  if (D != "auto") {
    try {
      if (parse_site(D) < 0) fail("D must be nonnegative");
    } catch (const std::invalid_argument&) {
      fail("D must be \"auto\" or an integer");
    }
  }
  if (!(quantile_p > 0.0 && quantile_p < 1.0)) fail("quantile_p must lie in (0, 1)");
  if (m_runs < 20) fail("m_runs must be at least 20");
  if (!(eps_path > 0.0 && eps_path < 1.0)) fail("eps_path must lie in (0, 1)");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  ExperimentConfig c;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const json& v = it.value();
      if (k == "alphas") c.alphas = v.get<std::vector<double>>();
      else if (k == "n_max") c.n_max = v.get<std::int64_t>();
      else if (k == "runs") c.runs = v.get<std::int64_t>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "x_cache") c.x_cache = v.get<std::int64_t>();
      else if (k == "grid_log2") c.grid_log2 = v.get<int>();
      else if (k == "threads") c.threads = v.get<int>();
      else if (k == "out_dir") c.out_dir = v.get<std::string>();
      else if (k == "output") c.output = v.get<std::string>();
      else if (k == "fit_min") c.fit_min = v.get<std::int64_t>();
      else if (k == "level_max") c.level_max = v.get<int>();
      else if (k == "set") {
        c.set.clear();
        for (const json& s : v) c.set.push_back(s.is_string() ? parse_site(s.get<std::string>()) : Site{s.get<std::int64_t>()});
      } else if (k == "starts") c.starts = v.get<std::vector<double>>();
      else if (k == "walks") c.walks = v.get<std::int64_t>();
      else if (k == "eps_escape") c.eps_escape = v.get<double>();
      else if (k == "q_max") c.q_max = v.get<std::int64_t>();
      else if (k == "D") c.D = v.is_string() ? v.get<std::string>() : std::to_string(v.get<std::int64_t>());
      else if (k == "quantile_p") c.quantile_p = v.get<double>();
      else if (k == "m_runs") c.m_runs = v.get<std::int64_t>();
      else if (k == "eps_path") c.eps_path = v.get<double>();
      else if (k == "force") c.force = v.get<bool>();
      else throw std::invalid_argument("config: unknown key '" + k + "'");
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_echo(const ExperimentConfig& c) {
  json j;
  j["alphas"] = c.alphas;
  j["n_max"] = c.n_max;
  j["runs"] = c.runs;
  j["seed"] = c.seed;
  j["x_cache"] = c.x_cache;
  j["grid_log2"] = c.grid_log2;
  j["fit_min"] = c.fit_min;
  j["level_max"] = c.level_max;
  json set = json::array();
  for (Site s : c.set) set.push_back(to_string(s));
  j["set"] = set;
  j["starts"] = c.starts;
  j["walks"] = c.walks;
  j["eps_escape"] = c.eps_escape;
  j["q_max"] = c.q_max;
  j["D"] = c.D;
  j["quantile_p"] = c.quantile_p;
  j["m_runs"] = c.m_runs;
  j["eps_path"] = c.eps_path;
  j["force"] = c.force;
  return j.dump();
}

void ExperimentResult::add(double alpha, std::int64_t n, const std::string& statistic, double value, double lo,
                           double hi, std::int64_t runs) {
  if (!(lo <= value && value <= hi))
    throw std::logic_error("result row " + statistic + ": bounds do not bracket the value");
  rows.push_back(ResultRow{experiment, alpha, n, statistic, value, lo, hi, runs});
}

const ResultRow* ExperimentResult::find(double alpha, std::int64_t n, const std::string& statistic) const {
  for (const ResultRow& r : rows)
    if (r.alpha == alpha && r.n == n && r.statistic == statistic) return &r;
  return nullptr;
}

bool ExperimentResult::passed() const {
  for (const Check& c : checks)
    if (!c.passed) return false;
  return true;
}

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace

void write_csv(std::ostream& out, const ExperimentResult& r) {
  json prov;
  prov["experiment"] = r.experiment;
  prov["version"] = kVersion;
  prov["config"] = json::parse(r.config.empty() ? "{}" : r.config);
  prov["green_fingerprints"] = r.fingerprints;
  out << "# provenance " << prov.dump() << '\n';
  for (const std::string& note : r.notes) out << "# note " << note << '\n';
  for (const Check& c : r.checks) out << "# check " << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
  out << "experiment,alpha,n,statistic,value,lo,hi,runs\n";
  for (const ResultRow& row : r.rows)
    out << row.experiment << ',' << num(row.alpha) << ',' << row.n << ',' << row.statistic << ',' << num(row.value)
        << ',' << num(row.lo) << ',' << num(row.hi) << ',' << row.runs << '\n';
}

std::string to_csv(const ExperimentResult& result) {
  std::ostringstream out;
  write_csv(out, result);
  return out.str();
}

ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& series) {
  if (series.size() < 3) throw std::invalid_argument("fit_exponent: need at least 3 points");
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!(series[i].first > 0.0) || !(series[i].second > 0.0))
      throw std::invalid_argument("fit_exponent: values must be positive");
    if (i > 0 && !(series[i].first > series[i - 1].first))
      throw std::invalid_argument("fit_exponent: n must be strictly increasing");
  }
  const auto m = static_cast<double>(series.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [n, v] : series) {
    mx += std::log(n);
    my += std::log(v);
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [n, v] : series) {
    sxx += (std::log(n) - mx) * (std::log(n) - mx);
    sxy += (std::log(n) - mx) * (std::log(v) - my);
  }
  ExponentFit fit;
  fit.points = series.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (const auto& [n, v] : series) {
    const double e = std::log(v) - fit.intercept - fit.slope * std::log(n);
    rss += e * e;
  }
  const double se = std::sqrt(rss / (m - 2.0) / sxx);
  const boost::math::students_t t(m - 2.0);
  const double half = boost::math::quantile(boost::math::complement(t, 0.025)) * se;
  fit.lo = fit.slope - half;
  fit.hi = fit.slope + half;
  return fit;
}

std::pair<double, double> clopper_pearson(std::int64_t k, std::int64_t n, double level) {
  if (n < 1 || k < 0 || k > n) throw std::invalid_argument("clopper_pearson: need 0 <= k <= n, n >= 1");
  const double a = (1.0 - level) / 2.0;
  const auto kd = static_cast<double>(k), nd = static_cast<double>(n);
  const double lo = k == 0 ? 0.0 : boost::math::quantile(boost::math::beta_distribution<>(kd, nd - kd + 1.0), a);
  const double hi = k == n ? 1.0 : boost::math::quantile(boost::math::beta_distribution<>(kd + 1.0, nd - kd), 1.0 - a);
  return {lo, hi};
}

ExperimentResult run_experiment(const std::string& name, const ExperimentConfig& config) {
  if (name == "scaling") return exp_scaling(config);
  if (name == "cantor") return exp_cantor(config);
  if (name == "harmonic") return exp_harmonic(config);
  if (name == "coupling") return exp_coupling(config);
  throw std::invalid_argument("unknown experiment '" + name + "'");
}

}  // namespace ldla
