#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ldla/dla.hpp"

namespace ldla {

struct SdlaEvent {
  int component = 0;  // 0: S_hat, 1: S
  GluingEvent event;
};

/// Split DLA with components S_hat (starts at {0}) and S (born at the q-th
/// split from S_hat). S_hat draws from stream derive_seed(seed, 0), which is
/// the dla_run stream; S from derive_seed(seed, 1).
struct SdlaResult {
  std::int64_t n = 0;
  std::int64_t q = 0;
  Site D = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream_hat = 0;
  std::uint64_t stream_s = 0;
  std::vector<Site> S;
  std::vector<Site> S_hat;
  std::int64_t split_count = 0;  // proposals from S_hat with |step| > D
  std::optional<double> beta_q;
  std::optional<Site> b_q;
  std::optional<double> zeta_q;
  double sigma = 0.0;  // time at which |S| + |S_hat| = n
  bool overlap = false;
  std::vector<SdlaEvent> events;
};

SdlaResult sdla_run(const StepLaw& law, const GreenTable& table, std::int64_t n, std::int64_t q, Site D,
                    std::uint64_t seed, PotentialOptions options = {});

struct CouplingOptions {
  int q_max = 8;
  // Conditioned walk paths stop once the hit probability of the current
  // aggregate from their position falls below this.
  double eps_path = 1e-4;
  std::int64_t path_step_budget = 1'000'000;
  PotentialOptions potential;
};

struct Interaction {
  double t = 0.0;
  // "T_S_hits_S_hat": a trajectory from S meets S_hat.
  // "T_hat_hits_S": a trajectory from S_hat meets S.
  std::string kind;
};

struct CouplingReport {
  std::int64_t n = 0;
  std::int64_t q = 0;
  Site D = 0;
  std::uint64_t seed = 0;
  bool born = false;
  std::optional<double> beta_q;
  std::optional<Site> b_q;
  std::optional<double> zeta_q;
  bool equal_at_tau = true;
  std::optional<Interaction> first_interaction;
  bool trajectory_budget_exceeded = false;
  double truncation_error = 0.0;
  // Colour-q points coincide with S up to zeta_q, and A = S + S_hat disjointly.
  bool colour_consistent = true;
  std::int64_t s_size = 0;
  std::int64_t s_hat_size = 0;
  // (time since birth, |S|) after each growth of S, until zeta_q or the end.
  std::vector<std::pair<double, std::int64_t>> s_trace;
  double end_time = 0.0;
};

/// One DLA, driven by the dla_run stream, with the split labellings
/// q = 1..q_max tracked simultaneously. Paths and auxiliary uniforms come
/// from derive_seed(seed, 1).
std::vector<CouplingReport> coupled_run(const StepLaw& law, const GreenTable& table, std::int64_t n, Site D,
                                        std::uint64_t seed, const CouplingOptions& options = {});

CouplingReport coupled_run(const StepLaw& law, const GreenTable& table, std::int64_t n, std::int64_t q, Site D,
                           std::uint64_t seed, CouplingOptions options = {});

/// One JSON object per line, without a trailing newline.
std::string to_json_line(const SdlaResult& result);
std::string to_json_line(const CouplingReport& report);

struct MEstimate {
  double M = 0.0;
  std::int64_t size = 0;  // floor(n / ln n)
  std::vector<double> sums;  // sorted
};

/// 5/6-quantile of sum_{i <= n / ln n} 1/capa(A_{tau(i)}) over `runs`
/// independent DLAs; run r uses seed derive_seed(seed, r).
MEstimate estimate_M(const StepLaw& law, const GreenTable& table, std::int64_t n, std::int64_t runs,
                     std::uint64_t seed, int threads = 1, double p = 5.0 / 6.0);

/// sup{t : #{x_i < t} / R < p} for the empirical sample.
double upper_quantile(std::vector<double> values, double p);

}  // namespace ldla
