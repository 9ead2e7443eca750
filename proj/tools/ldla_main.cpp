// ldla: command line front end for the aggregation library.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ldla/harness.hpp"
#include "ldla/parallel.hpp"
#include "ldla/sdla.hpp"

namespace fs = std::filesystem;
using namespace ldla;

namespace {

struct Global {
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out_dir;
};

ExperimentConfig base_config(const Global& g) {
  ExperimentConfig c = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
  if (g.seed) c.seed = *g.seed;
  c.threads = g.threads;
  if (!g.out_dir.empty()) c.out_dir = g.out_dir;
  return c;
}

std::uint64_t seed_of(const Global& g) { return g.seed.value_or(1); }

std::string in_out_dir(const Global& g, const std::string& path) {
  if (path.empty() || path == "-" || g.out_dir.empty() || fs::path(path).is_absolute()) return path;
  fs::create_directories(g.out_dir);
  return (fs::path(g.out_dir) / path).string();
}

// Writes to `path`, or stdout for "" and "-".
template <class Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  fn(out);
}

GreenTable make_table(const StepLaw& law, std::int64_t x_cache, int grid_log2) {
  GreenOptions o;
  o.x_cache = x_cache;
  o.grid_log2 = grid_log2;
  return build_table(law, o);
}

std::vector<Site> parse_set(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("--set: expected kind:value, got '" + spec + "'");
  const std::string kind = spec.substr(0, colon), arg = spec.substr(colon + 1);
  if (kind == "file") {
    std::ifstream in(arg);
    if (!in) throw std::runtime_error("cannot open set file " + arg);
    std::vector<Site> pts;
    std::string line;
    while (std::getline(in, line)) {
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos || line[b] == '#') continue;
      pts.push_back(parse_site(line.substr(b, line.find_last_not_of(" \t\r") - b + 1)));
    }
    return pts;
  }
  if (kind == "interval") {
    const std::int64_t n = std::stoll(arg);
    if (n < 0) throw std::invalid_argument("interval:<n> needs n >= 0");
    std::vector<Site> pts;
    for (std::int64_t i = 0; i <= n; ++i) pts.push_back(i);
    return pts;
  }
  if (kind == "cantor") return cantor_set(std::stoi(arg));
  if (kind == "progression") {
    const auto comma = arg.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("progression:<d>,<m>");
    return progression(std::stoll(arg.substr(0, comma)), std::stoll(arg.substr(comma + 1)));
  }
  throw std::invalid_argument("--set: unknown kind '" + kind + "'");
}

Site resolve_D(const std::string& spec, const StepLaw& law, const GreenTable& table, std::int64_t n,
               std::uint64_t seed, int threads) {
  if (spec != "auto") return parse_site(spec);
  const MEstimate m = estimate_M(law, table, n, 20, derive_seed(seed, std::uint64_t{1} << 32), threads);
  const Site D = threshold_from_formula(law.alpha(), n, m.M, law.char_fn_leading_coefficient());
  std::fprintf(stderr, "M = %.10g, D = %s\n", m.M, to_string(D).c_str());
  return D;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long-range diffusion-limited aggregation on the integers"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--config", g.config, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "base seed");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "directory for outputs");
  app.set_version_flag("--version", std::string(kVersion));

  double alpha = 0.5;
  std::int64_t x_cache = 1 << 16;
  int grid_log2 = 22;
  auto law_opts = [&](CLI::App* s) {
    s->add_option("--alpha", alpha, "step exponent in (0, 1)")->check(CLI::Range(0.0, 1.0));
    s->add_option("--x-cache", x_cache, "Green table size");
    s->add_option("--grid-log2", grid_log2, "log2 of the transform grid");
  };

  // green
  auto* green_cmd = app.add_subcommand("green", "Green function value and asymptotic constant");
  law_opts(green_cmd);
  std::string x_text = "0", save_path, load_path;
  green_cmd->add_option("--x", x_text, "site");
  green_cmd->add_option("--save", save_path, "write the table to this file");
  green_cmd->add_option("--load", load_path, "read the table from this file")->check(CLI::ExistingFile);

  // capa
  auto* capa_cmd = app.add_subcommand("capa", "Capacity of a finite set");
  law_opts(capa_cmd);
  std::string set_spec = "interval:16";
  bool print_w = false;
  capa_cmd->add_option("--set", set_spec, "file:<path> | interval:<n> | cantor:<level> | progression:<d>,<m>");
  capa_cmd->add_flag("--w", print_w, "print the equilibrium vector");

  // dla run
  auto* dla_cmd = app.add_subcommand("dla", "Aggregation runs");
  dla_cmd->require_subcommand(1);
  auto* dla_run_cmd = dla_cmd->add_subcommand("run", "Grow one aggregate and write its event log");
  law_opts(dla_run_cmd);
  std::int64_t n = 256, snapshot_base = 2;
  std::string split_text = "none", out_path;
  dla_run_cmd->add_option("--n", n, "target size")->check(CLI::PositiveNumber);
  dla_run_cmd->add_option("--snapshot-base", snapshot_base, "snapshot at powers of this base");
  dla_run_cmd->add_option("--split-threshold", split_text, "none | value:<D> | formula:<M>,<C1>");
  dla_run_cmd->add_option("--out", out_path, "event log path (JSON Lines); stdout if omitted");

  // sdla run / couple
  auto* sdla_cmd = app.add_subcommand("sdla", "Split aggregation");
  sdla_cmd->require_subcommand(1);
  std::int64_t q = 1, runs = 1;
  std::string D_text = "auto";
  auto sdla_opts = [&](CLI::App* s) {
    law_opts(s);
    s->add_option("--n", n, "target size")->check(CLI::PositiveNumber);
    s->add_option("--q", q, "split index")->check(CLI::PositiveNumber);
    s->add_option("--D", D_text, "auto | <value>");
    s->add_option("--runs", runs, "number of runs")->check(CLI::PositiveNumber);
    s->add_option("--out", out_path, "JSON Lines output; stdout if omitted");
  };
  auto* sdla_run_cmd = sdla_cmd->add_subcommand("run", "Simulate the two-component process");
  sdla_opts(sdla_run_cmd);
  auto* sdla_couple_cmd = sdla_cmd->add_subcommand("couple", "Coupled aggregation with split labelling");
  sdla_opts(sdla_couple_cmd);

  // exp
  auto* exp_cmd = app.add_subcommand("exp", "Ensemble experiments writing CSV tables");
  exp_cmd->require_subcommand(1);
  std::vector<double> exp_alphas;
  std::optional<std::int64_t> exp_n, exp_runs;
  bool force = false;
  for (const char* name : {"scaling", "cantor", "harmonic", "coupling"}) {
    auto* s = exp_cmd->add_subcommand(name, std::string("run the ") + name + " experiment");
    s->add_option("--alpha", exp_alphas, "override alphas (repeatable)");
    s->add_option("--n", exp_n, "override n_max");
    s->add_option("--runs", exp_runs, "override runs");
    s->add_flag("--force", force, "run outside the supported regime without pass/fail");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (*green_cmd) {
      const StepLaw law(alpha);
      GreenTable table = [&] {
        if (load_path.empty()) return make_table(law, x_cache, grid_log2);
        std::ifstream in(load_path);
        GreenTable t = GreenTable::load(in);
        if (t.alpha() != alpha) throw std::runtime_error("loaded table has alpha " + std::to_string(t.alpha()));
        return t;
      }();
      if (!save_path.empty()) {
        std::ofstream out(in_out_dir(g, save_path));
        table.save(out);
      }
      const Site x = parse_site(x_text);
      std::printf("alpha %.10g\nx %s\nG(x) %.15g\nA_G %.15g\nfingerprint %s\n", alpha, to_string(x).c_str(), table(x),
                  table.asym_coeff(), table.fingerprint().c_str());
      return 0;
    }
    if (*capa_cmd) {
      const StepLaw law(alpha);
      const GreenTable table = make_table(law, x_cache, grid_log2);
      std::vector<Site> pts = parse_set(set_spec);
      PotentialOptions o;
      o.cap = std::max<std::size_t>(o.cap, pts.size());
      const PotentialState s(table, pts, o);
      std::printf("size %zu\ncapacity %.15g\nresidual %.3e\n", s.size(), s.capacity(), s.residual());
      if (print_w)
        for (std::size_t i = 0; i < s.size(); ++i) std::printf("%s %.15g\n", to_string(s.points()[i]).c_str(), s.w()[i]);
      return 0;
    }
    if (*dla_run_cmd) {
      const StepLaw law(alpha);
      const GreenTable table = make_table(law, x_cache, grid_log2);
      DlaOptions o;
      o.snapshot_base = snapshot_base;
      o.split = SplitThreshold::parse(split_text);
      o.potential.cap = std::max<std::size_t>(o.potential.cap, static_cast<std::size_t>(n));
      const EventLog log = dla_run(law, table, n, seed_of(g), o);
      emit(in_out_dir(g, out_path), [&](std::ostream& out) { write_event_log(out, log); });
      std::fprintf(stderr, "n %lld diameter %s capacity %.10g t %.10g\n", static_cast<long long>(n),
                   to_string(log.final_state->diameter).c_str(), log.final_state->capacity, log.final_state->t);
      return 0;
    }
    if (*sdla_run_cmd || *sdla_couple_cmd) {
      const StepLaw law(alpha);
      const GreenTable table = make_table(law, x_cache, grid_log2);
      const Site D = resolve_D(D_text, law, table, n, seed_of(g), g.threads);
      PotentialOptions po;
      po.cap = std::max<std::size_t>(po.cap, static_cast<std::size_t>(n));
      const auto lines = parallel_map(static_cast<std::size_t>(runs), g.threads, [&](std::size_t r) {
        const std::uint64_t seed = derive_seed(seed_of(g), r);
        if (*sdla_run_cmd) return to_json_line(sdla_run(law, table, n, q, D, seed, po));
        CouplingOptions co;
        co.potential = po;
        return to_json_line(coupled_run(law, table, n, q, D, seed, co));
      });
      emit(in_out_dir(g, out_path), [&](std::ostream& out) {
        for (const std::string& l : lines) out << l << '\n';
      });
      return 0;
    }
    if (*exp_cmd) {
      for (auto* s : exp_cmd->get_subcommands()) {
        ExperimentConfig c = base_config(g);
        if (!exp_alphas.empty()) c.alphas = exp_alphas;
        if (exp_n) c.n_max = *exp_n;
        if (exp_runs) c.runs = *exp_runs;
        if (force) c.force = true;
        const ExperimentResult r = run_experiment(s->get_name(), c);
        fs::create_directories(c.out_dir);
        const fs::path path = fs::path(c.out_dir) / (c.output.empty() ? r.experiment + ".csv" : c.output);
        emit(path.string(), [&](std::ostream& out) { write_csv(out, r); });
        for (const Check& ch : r.checks)
          std::printf("%s %s: %s\n", ch.passed ? "PASS" : "FAIL", ch.name.c_str(), ch.detail.c_str());
        std::printf("wrote %s\n", path.string().c_str());
        return r.passed() ? 0 : 1;
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ldla: %s\n", e.what());
    return 2;
  }
  return 0;
}
