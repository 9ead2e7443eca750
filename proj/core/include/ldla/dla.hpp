#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ldla/green.hpp"
#include "ldla/potential.hpp"
#include "ldla/rng.hpp"
#include "ldla/steplaw.hpp"

namespace ldla {

inline constexpr const char* kVersion = "0.1.0";

/// Large-jump threshold D. Steps with |step| > D are splits.
struct SplitThreshold {
  enum class Kind { None, Value, Formula };
  Kind kind = Kind::None;
  Site value = 0;     // Kind::Value
  double M = 0.0;     // Kind::Formula
  double C1 = 0.0;    // Kind::Formula

  /// "none" | "value:<D>" | "formula:<M>,<C1>".
  static SplitThreshold parse(const std::string& text);
  std::string to_string() const;

  /// D for a target size n; nullopt when disarmed. The formula reads
  /// D = floor((6 C1 n M / ln n)^{1/alpha}).
  std::optional<Site> resolve(double alpha, std::int64_t n) const;
};

Site threshold_from_formula(double alpha, std::int64_t n, double M, double C1);

struct GluingEvent {
  std::int64_t n_before = 0;
  double t = 0.0;
  Site parent = 0;
  Site child = 0;
  Site step_size = 0;
  std::int64_t rejected_proposals = 0;
  bool split_flag = false;
  // Rejected proposals since the previous event whose step exceeded D.
  std::int64_t rejected_splits = 0;
  double capacity = 0.0;  // after the gluing
};

struct Snapshot {
  std::int64_t n = 0;
  double t = 0.0;
  Site diameter = 0;
  double capacity = 0.0;
};

/// One activation: exponential clock, uniform parent, step from the law.
struct Proposal {
  double dt = 0.0;
  std::size_t parent_index = 0;
  Site parent = 0;
  Site step = 0;
  Site target = 0;
};

/// Draws in the fixed order dt, parent, step. Throws StepOverflowError.
Proposal draw_proposal(const PotentialState& state, const StepLaw& law, Rng& rng);

/// DLA state: a potential state, a clock and a generator.
class Aggregate {
 public:
  Aggregate(const StepLaw& law, const GreenTable& table, std::uint64_t seed, PotentialOptions options = {},
            const std::vector<Site>& initial = {0});

  const StepLaw& law() const noexcept { return *law_; }
  const PotentialState& potential() const noexcept { return potential_; }
  PotentialState& potential() noexcept { return potential_; }
  std::size_t n() const noexcept { return potential_.size(); }
  double t() const noexcept { return t_; }
  void set_time(double t) noexcept { t_ = t; }
  Site diameter() const noexcept { return potential_.diameter(); }
  double capacity() const noexcept { return potential_.capacity(); }
  Rng& rng() noexcept { return rng_; }

 private:
  const StepLaw* law_;
  PotentialState potential_;
  double t_ = 0.0;
  Rng rng_;
};

/// Runs activations until one is accepted, then glues its point.
GluingEvent dla_step(Aggregate& agg, std::optional<Site> split_threshold = std::nullopt);

/// Same loop on a frozen set: returns the (parent, child) of the next
/// gluing without modifying `state`. `proposals` receives the activation count.
std::pair<Site, Site> sample_gluing(const PotentialState& state, const StepLaw& law, Rng& rng,
                                    std::int64_t* proposals = nullptr);

struct DlaOptions {
  std::int64_t snapshot_base = 2;
  SplitThreshold split;
  PotentialOptions potential;
};

struct LogHeader {
  std::string version = kVersion;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::int64_t table_cutoff = 0;
  double zeta = 0.0;
  double tail_constant = 0.0;
  std::int64_t x_cache = 0;
  std::string green_fingerprint;
  std::string split_threshold = "none";
  std::optional<Site> D;
  std::int64_t n_target = 0;
};

struct EventLog {
  LogHeader header;
  std::vector<GluingEvent> events;
  std::vector<Snapshot> snapshots;
  std::optional<Snapshot> final_state;
  std::uint64_t clamp_count = 0;
  std::uint64_t refactor_count = 0;
  bool indefinite_fallback = false;
};

LogHeader make_header(const StepLaw& law, const GreenTable& table, std::uint64_t seed, std::int64_t n_target);

/// DLA from {0} to n_target points. The generator is seeded with
/// derive_seed(seed, 0).
EventLog dla_run(const StepLaw& law, const GreenTable& table, std::int64_t n_target, std::uint64_t seed,
                 const DlaOptions& options = {});

/// Rebuilds the aggregate from the events; checks every event against the
/// growing set and the logged capacities against a fresh solve (1e-7 relative).
Aggregate replay(const EventLog& log, const StepLaw& law, const GreenTable& table, PotentialOptions options = {});

void write_event_log(std::ostream& out, const EventLog& log);
EventLog read_event_log(std::istream& in);

}  // namespace ldla
