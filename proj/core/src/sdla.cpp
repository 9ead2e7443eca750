#include "ldla/sdla.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "ldla/parallel.hpp"

namespace ldla {
namespace {

struct Component {
  std::unique_ptr<Aggregate> agg;
  Proposal pending;
  double pending_time = 0.0;
  std::int64_t rejected = 0;
  std::int64_t rejected_splits = 0;

  void draw_next() {
    pending = draw_proposal(agg->potential(), agg->law(), agg->rng());
    pending_time = agg->t() + pending.dt;
  }
};

}  // namespace

SdlaResult sdla_run(const StepLaw& law, const GreenTable& table, std::int64_t n, std::int64_t q, Site D,
                    std::uint64_t seed, PotentialOptions options) {
  if (q < 1) throw std::invalid_argument("sdla_run: q must be at least 1");
  if (D < 0) throw std::invalid_argument("sdla_run: D must be nonnegative");
  if (n < 1 || static_cast<std::size_t>(n) > options.cap) throw std::invalid_argument("sdla_run: bad target size");

  SdlaResult r;
  r.n = n;
  r.q = q;
  r.D = D;
  r.seed = seed;
  r.stream_hat = derive_seed(seed, 0);
  r.stream_s = derive_seed(seed, 1);

  Component hat;
  hat.agg = std::make_unique<Aggregate>(law, table, r.stream_hat, options);
  Component s;
  auto total = [&] {
    return static_cast<std::int64_t>(hat.agg->n() + (s.agg ? s.agg->n() : 0));
  };

  hat.draw_next();
  double now = 0.0;
  while (total() < n) {
    const bool use_s = s.agg && s.pending_time < hat.pending_time;
    Component& c = use_s ? s : hat;
    Component& other = use_s ? hat : s;
    const Proposal p = c.pending;
    now = c.pending_time;
    c.agg->set_time(now);
    const bool large = site_abs(p.step) > D;

    if (!use_s && large) {
      ++r.split_count;
      if (r.split_count == q && !s.agg) {
        r.beta_q = now;
        r.b_q = p.target;
        if (hat.agg->potential().contains(p.target)) r.overlap = true;
        s.agg = std::make_unique<Aggregate>(law, table, r.stream_s, options, std::vector<Site>{p.target});
        s.agg->set_time(now);
        s.draw_next();
        GluingEvent ev;
        ev.n_before = 0;
        ev.t = now;
        ev.parent = p.parent;
        ev.child = p.target;
        ev.step_size = site_abs(p.step);
        ev.rejected_proposals = c.rejected;
        ev.split_flag = true;
        ev.rejected_splits = c.rejected_splits;
        ev.capacity = s.agg->capacity();
        r.events.push_back({1, ev});
        c.rejected = c.rejected_splits = 0;
        c.draw_next();
        continue;
      }
    }
    if (use_s && large && !r.zeta_q) r.zeta_q = now;

    PotentialState& state = c.agg->potential();
    if (!state.contains(p.target) && c.agg->rng().uniform() < state.escape_outside(p.target)) {
      GluingEvent ev;
      ev.n_before = static_cast<std::int64_t>(state.size());
      state.extend(p.target);
      ev.t = now;
      ev.parent = p.parent;
      ev.child = p.target;
      ev.step_size = site_abs(p.step);
      ev.rejected_proposals = c.rejected;
      ev.split_flag = large;
      ev.rejected_splits = c.rejected_splits;
      ev.capacity = state.capacity();
      r.events.push_back({use_s ? 1 : 0, ev});
      c.rejected = c.rejected_splits = 0;
      if (other.agg && other.agg->potential().contains(p.target)) r.overlap = true;
    } else {
      ++c.rejected;
      if (large) ++c.rejected_splits;
    }
    c.draw_next();
  }
  r.sigma = now;
  r.S_hat = hat.agg->potential().points();
  if (s.agg) r.S = s.agg->potential().points();
  return r;
}

double upper_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("upper_quantile: empty sample");
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("upper_quantile: p must lie in (0, 1]");
  std::sort(values.begin(), values.end());
  const double r = static_cast<double>(values.size());
  auto k = static_cast<std::size_t>(std::ceil(p * r - 1e-9));
  k = std::clamp<std::size_t>(k, 1, values.size());
  return values[k - 1];
}

MEstimate estimate_M(const StepLaw& law, const GreenTable& table, std::int64_t n, std::int64_t runs,
                     std::uint64_t seed, int threads, double p) {
  if (runs < 20) throw std::invalid_argument("estimate_M: need at least 20 runs");
  if (n < 3) throw std::invalid_argument("estimate_M: n must be at least 3");
  MEstimate est;
  est.size = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(static_cast<double>(n) / std::log(static_cast<double>(n)))));
  est.sums = parallel_map(static_cast<std::size_t>(runs), threads, [&](std::size_t r) {
    const EventLog log = dla_run(law, table, est.size, derive_seed(seed, r));
    // A_{tau(1)} = {0}, then one capacity per gluing.
    double sum = 1.0 / PotentialState(table, {0}).capacity();
    for (const GluingEvent& e : log.events) sum += 1.0 / e.capacity;
    return sum;
  });
  est.M = upper_quantile(est.sums, p);
  std::sort(est.sums.begin(), est.sums.end());
  return est;
}

}  // namespace ldla
