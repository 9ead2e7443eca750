#include "ldla/dla.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ldla {

Site threshold_from_formula(double alpha, std::int64_t n, double M, double C1) {
  if (n < 2) throw std::invalid_argument("split threshold: n must be at least 2");
  if (!(M > 0.0) || !(C1 > 0.0)) throw std::invalid_argument("split threshold: M and C1 must be positive");
  const double log_d = (std::log(6.0 * C1 * static_cast<double>(n) * M) - std::log(std::log(static_cast<double>(n)))) / alpha;
  if (log_d > 120.0 * std::numbers::ln2) throw std::invalid_argument("split threshold: D exceeds 2^120");
  return static_cast<Site>(std::floor(std::exp(log_d)));
}

SplitThreshold SplitThreshold::parse(const std::string& text) {
  SplitThreshold s;
  if (text == "none" || text.empty()) return s;
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("split threshold: cannot parse '" + text + "'");
  const std::string kind = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  if (kind == "value") {
    s.kind = Kind::Value;
    s.value = parse_site(rest);
    if (s.value < 0) throw std::invalid_argument("split threshold: D must be nonnegative");
    return s;
  }
  if (kind == "formula") {
    const auto comma = rest.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("split threshold: expected formula:<M>,<C1>");
    s.kind = Kind::Formula;
    s.M = std::stod(rest.substr(0, comma));
    s.C1 = std::stod(rest.substr(comma + 1));
    if (!(s.M > 0.0) || !(s.C1 > 0.0)) throw std::invalid_argument("split threshold: M and C1 must be positive");
    return s;
  }
  throw std::invalid_argument("split threshold: unknown kind '" + kind + "'");
}

std::string SplitThreshold::to_string() const {
  switch (kind) {
    case Kind::None:
      return "none";
    case Kind::Value:
      return "value:" + ldla::to_string(value);
    case Kind::Formula: {
      char buf[96];
      std::snprintf(buf, sizeof buf, "formula:%.17g,%.17g", M, C1);
      return buf;
    }
  }
  return "none";
}

std::optional<Site> SplitThreshold::resolve(double alpha, std::int64_t n) const {
  switch (kind) {
    case Kind::None:
      return std::nullopt;
    case Kind::Value:
      return value;
    case Kind::Formula:
      return threshold_from_formula(alpha, n, M, C1);
  }
  return std::nullopt;
}

Proposal draw_proposal(const PotentialState& state, const StepLaw& law, Rng& rng) {
  Proposal p;
  const std::size_t n = state.size();
  p.dt = rng.exponential(static_cast<double>(n));
  p.parent_index = static_cast<std::size_t>(rng.below(n));
  p.parent = state.points()[p.parent_index];
  p.step = law.sample_step(rng);
  p.target = p.parent + p.step;
  return p;
}

Aggregate::Aggregate(const StepLaw& law, const GreenTable& table, std::uint64_t seed, PotentialOptions options,
                     const std::vector<Site>& initial)
    : law_(&law), potential_(table, initial, options), rng_(seed) {}

GluingEvent dla_step(Aggregate& agg, std::optional<Site> split_threshold) {
  GluingEvent ev;
  ev.n_before = static_cast<std::int64_t>(agg.n());
  PotentialState& state = agg.potential();
  double t = agg.t();
  for (;;) {
    const Proposal p = draw_proposal(state, agg.law(), agg.rng());
    t += p.dt;
    const bool split = split_threshold && site_abs(p.step) > *split_threshold;
    if (!state.contains(p.target) && agg.rng().uniform() < state.escape_outside(p.target)) {
      state.extend(p.target);
      agg.set_time(t);
      ev.t = t;
      ev.parent = p.parent;
      ev.child = p.target;
      ev.step_size = site_abs(p.step);
      ev.split_flag = split;
      ev.capacity = state.capacity();
      return ev;
    }
    ++ev.rejected_proposals;
    if (split) ++ev.rejected_splits;
  }
}

std::pair<Site, Site> sample_gluing(const PotentialState& state, const StepLaw& law, Rng& rng,
                                    std::int64_t* proposals) {
  std::int64_t count = 0;
  for (;;) {
    const Proposal p = draw_proposal(state, law, rng);
    ++count;
    if (!state.contains(p.target) && rng.uniform() < state.escape_outside(p.target)) {
      if (proposals) *proposals = count;
      return {p.parent, p.target};
    }
  }
}

LogHeader make_header(const StepLaw& law, const GreenTable& table, std::uint64_t seed, std::int64_t n_target) {
  LogHeader h;
  h.alpha = law.alpha();
  h.seed = seed;
  h.table_cutoff = law.table_cutoff();
  h.zeta = law.zeta_norm();
  h.tail_constant = law.tail_constant();
  h.x_cache = table.x_cache();
  h.green_fingerprint = table.fingerprint();
  h.n_target = n_target;
  return h;
}

EventLog dla_run(const StepLaw& law, const GreenTable& table, std::int64_t n_target, std::uint64_t seed,
                 const DlaOptions& options) {
  if (n_target < 1) throw std::invalid_argument("dla_run: n_target must be positive");
  if (static_cast<std::size_t>(n_target) > options.potential.cap)
    throw std::invalid_argument("dla_run: n_target exceeds the potential cap");
  if (options.snapshot_base < 2) throw std::invalid_argument("dla_run: snapshot base must be at least 2");
  if (std::fabs(table.alpha() - law.alpha()) > 0.0) throw std::invalid_argument("dla_run: table built for another alpha");

  EventLog log;
  log.header = make_header(law, table, seed, n_target);
  log.header.split_threshold = options.split.to_string();
  const auto D = n_target >= 2 || options.split.kind != SplitThreshold::Kind::Formula
                     ? options.split.resolve(law.alpha(), n_target)
                     : std::nullopt;
  log.header.D = D;

  Aggregate agg(law, table, derive_seed(seed, 0), options.potential);
  std::int64_t next_snapshot = 1;
  auto snapshot = [&] {
    return Snapshot{static_cast<std::int64_t>(agg.n()), agg.t(), agg.diameter(), agg.capacity()};
  };
  auto maybe_snapshot = [&] {
    if (static_cast<std::int64_t>(agg.n()) == next_snapshot) {
      log.snapshots.push_back(snapshot());
      next_snapshot *= options.snapshot_base;
    }
  };
  maybe_snapshot();
  while (static_cast<std::int64_t>(agg.n()) < n_target) {
    log.events.push_back(dla_step(agg, D));
    maybe_snapshot();
  }
  log.final_state = snapshot();
  log.clamp_count = agg.potential().clamp_count();
  log.refactor_count = agg.potential().refactor_count();
  log.indefinite_fallback = agg.potential().indefinite_fallback();
  return log;
}

Aggregate replay(const EventLog& log, const StepLaw& law, const GreenTable& table, PotentialOptions options) {
  if (log.header.version != kVersion)
    throw std::runtime_error("replay: log written by version " + log.header.version);
  if (log.header.alpha != law.alpha()) throw std::runtime_error("replay: alpha mismatch");
  if (!log.header.green_fingerprint.empty() && log.header.green_fingerprint != table.fingerprint())
    throw std::runtime_error("replay: Green table fingerprint mismatch");
  if (options.cap < log.events.size() + 1) options.cap = log.events.size() + 1;

  Aggregate agg(law, table, derive_seed(log.header.seed, 0), options);
  auto close = [](double a, double b) { return std::fabs(a - b) <= 1e-7 * std::max(std::fabs(a), std::fabs(b)); };
  double last_t = 0.0;
  double logged_capacity = agg.capacity();
  for (std::size_t i = 0; i < log.events.size(); ++i) {
    const GluingEvent& e = log.events[i];
    const std::string where = "replay: event " + std::to_string(i) + ": ";
    if (e.n_before != static_cast<std::int64_t>(agg.n())) throw std::runtime_error(where + "n_before out of sequence");
    if (!agg.potential().contains(e.parent)) throw std::runtime_error(where + "parent not in the aggregate");
    if (agg.potential().contains(e.child)) throw std::runtime_error(where + "child already in the aggregate");
    if (e.step_size != site_abs(e.child - e.parent)) throw std::runtime_error(where + "step size mismatch");
    if (e.t < last_t) throw std::runtime_error(where + "time decreases");
    agg.potential().extend(e.child);
    agg.set_time(e.t);
    last_t = e.t;
    if (e.capacity > 0.0 && !close(e.capacity, agg.capacity()))
      throw std::runtime_error(where + "capacity disagrees with the log");
    if (e.capacity > 0.0) logged_capacity = e.capacity;
  }
  if (log.final_state) {
    if (log.final_state->n != static_cast<std::int64_t>(agg.n())) throw std::runtime_error("replay: final size mismatch");
    logged_capacity = log.final_state->capacity;
  }
  const PotentialState fresh(table, agg.potential().points(), options);
  if (!close(fresh.capacity(), logged_capacity))
    throw std::runtime_error("replay: recomputed capacity disagrees with the logged value");
  return agg;
}

}  // namespace ldla
