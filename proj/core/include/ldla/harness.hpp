#pragma once

#include <cstdint>
#include <stdexcept>
#include <iosfwd>
#include <string>
#include <vector>

#include "ldla/site.hpp"

namespace ldla {

/// Flat experiment configuration. JSON keys match the field names.
struct ExperimentConfig {
  std::vector<double> alphas{0.25};
  std::int64_t n_max = 512;
  std::int64_t runs = 20;
  std::uint64_t seed = 1;
  std::int64_t x_cache = 1 << 16;
  int grid_log2 = 22;
  int threads = 1;
  std::string out_dir = ".";
  std::string output;  // CSV file name inside out_dir; "<experiment>.csv" when empty

  // scaling
  std::int64_t fit_min = 64;  // smallest snapshot size entering the fit

  // cantor
  int level_max = 8;

  // harmonic
  std::vector<Site> set{-3, 0, 7};
  std::vector<double> starts{1e3, 1e4, 1e5};
  std::int64_t walks = 400'000;
  double eps_escape = 1e-4;

  // coupling
  std::int64_t q_max = 0;  // 0: ceil(ln n)
  std::string D = "auto";  // "auto" or an integer
  double quantile_p = 5.0 / 6.0;
  std::int64_t m_runs = 20;
  double eps_path = 1e-4;
  bool force = false;

  /// Throws std::invalid_argument on bad values.
  void validate() const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
/// Canonical JSON echo. Scheduling fields (threads, out_dir, output) are left out
/// so the output bytes do not depend on them.
std::string config_echo(const ExperimentConfig& config);

struct ResultRow {
  std::string experiment;
  double alpha = 0.0;
  std::int64_t n = 0;
  std::string statistic;
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::int64_t runs = 0;
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ExperimentResult {
  std::string experiment;
  std::string config;  // config_echo
  std::vector<std::string> fingerprints;  // one per alpha
  std::vector<std::string> notes;
  std::vector<ResultRow> rows;
  std::vector<Check> checks;

  /// Appends a row; throws if the bounds do not bracket the value.
  void add(double alpha, std::int64_t n, const std::string& statistic, double value, double lo, double hi,
           std::int64_t runs);
  const ResultRow* find(double alpha, std::int64_t n, const std::string& statistic) const;
  bool passed() const;
};

/// CSV with a '#'-prefixed provenance header.
void write_csv(std::ostream& out, const ExperimentResult& result);
std::string to_csv(const ExperimentResult& result);

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double lo = 0.0;  // 95% confidence interval for the slope
  double hi = 0.0;
  std::size_t points = 0;
};

/// OLS of log value on log n.
ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& series);

/// Two-sided Clopper-Pearson interval.
std::pair<double, double> clopper_pearson(std::int64_t successes, std::int64_t trials, double level = 0.95);

ExperimentResult exp_scaling(const ExperimentConfig& config);
ExperimentResult exp_cantor(const ExperimentConfig& config);
ExperimentResult exp_harmonic(const ExperimentConfig& config);
ExperimentResult exp_coupling(const ExperimentConfig& config);

/// Dispatch by name: scaling, cantor, harmonic, coupling.
ExperimentResult run_experiment(const std::string& name, const ExperimentConfig& config);

}  // namespace ldla
