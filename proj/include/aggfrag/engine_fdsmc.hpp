// Exact-rate Monte Carlo stepper: pairs are drawn with probability
// proportional to K via the RateTable, so every trial is an accepted event
// and the time shift comes from the total rate,
//   tau = 2 V / (T (1 + lambda)),  V = N0 2^d / n0,  T = sum_i S_i.
//
// Draw order per event (fixed; runs are bit-reproducible for a given seed):
//   1. first-particle uniform (weight S_i)
//   2. second-particle uniform (weight K(s_i, s_j), j != i)
//   3. event-type uniform in [0,1): shatter iff r < lambda/(1+lambda)
//
// lambda(t) is evaluated once per event at the pre-shift time. The rate table
// is refreshed from scratch every rebuild_every events and after every
// duplication to cap incremental float drift.
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "aggfrag/errors.hpp"
#include "aggfrag/events.hpp"
#include "aggfrag/kernels.hpp"
#include "aggfrag/lambda_schedule.hpp"
#include "aggfrag/particle_store.hpp"
#include "aggfrag/rate_table.hpp"
#include "aggfrag/rng.hpp"

namespace aggfrag {

class FdsmcEngine {
 public:
  FdsmcEngine(const KernelSpec& spec, LambdaSchedule lambda, ParticleStore store,
              std::uint64_t seed, std::uint64_t stream = 0, EngineOptions opts = {})
      : spec_(spec),
        lambda_(std::move(lambda)),
        store_(std::move(store)),
        table_(spec, store_),
        rng_(seed, stream),
        opts_(opts) {}

  double time_shift() const { return time_shift_for(lambda_(t_)); }

  StepOutcome step() {
    AGGFRAG_CHECK(!extinct_ && store_.count() >= 2, "fdsmc step: fewer than two particles");
    ensure_positive_rate();
    const double lam = lambda_(t_);
    const double tau = time_shift_for(lam);
    const auto [pi, pj] = table_.sample_pair(store_, rng_);
    t_ += tau;
    ++stats_.trials;
    ++stats_.acceptances;

    const std::uint64_t total = pi.size + pj.size;
    const bool shatter = rng_.uniform01() < lam / (1.0 + lam);
    StepOutcome out;
    store_.remove_pair(pi, pj);
    if (shatter) {
      store_.insert(1, total);
      table_.apply_event(store_, pi, pj, 1, total);
      ++stats_.shatterings;
      out = {EventKind::Shattering, total};
    } else {
      if (total > opts_.max_size_guard)
        throw SimulationError("aggregate size " + std::to_string(total) +
                              " exceeds max_size_guard");
      store_.insert(total, 1);
      table_.apply_event(store_, pi, pj, total, 1);
      ++stats_.aggregations;
      out = {EventKind::Aggregation, total};
    }
    ++events_since_rebuild_;
    post_event();
    if (!extinct_ && events_since_rebuild_ >= opts_.rebuild_every) {
      table_.rebuild(store_);
      events_since_rebuild_ = 0;
    }
    return out;
  }

  // Run events while the next one still lands at or before t_target.
  // Returns false once the population is extinct.
  bool advance_until(double t_target) {
    while (!extinct_) {
      if (store_.count() < 2) {
        mark_extinct();
        break;
      }
      ensure_positive_rate();
      if (t_ + time_shift() > t_target) return true;
      step();
    }
    return false;
  }

  const ParticleStore& store() const { return store_; }
  const RateTable& table() const { return table_; }
  double time() const { return t_; }
  const EngineStats& stats() const { return stats_; }
  bool extinct() const { return extinct_; }
  const std::vector<EventRecord>& events() const { return events_; }

 private:
  double time_shift_for(double lam) const {
    return 2.0 * store_.effective_volume() / (table_.total_rate() * (1.0 + lam));
  }

  void ensure_positive_rate() {
    double t = table_.total_rate();
    if (t > 0.0 && std::isfinite(t)) return;
    table_.rebuild(store_);  // drift may have soured the incremental totals
    events_since_rebuild_ = 0;
    t = table_.total_rate();
    if (!(t > 0.0) || !std::isfinite(t))
      throw SimulationError("fdsmc: total collision rate is not positive");
  }

  void post_event() {
    if (store_.count() < 2) {
      mark_extinct();
      return;
    }
    if (opts_.cloning && 2 * store_.count() < store_.initial_count()) {
      store_.duplicate_all();
      table_.rebuild(store_);
      events_since_rebuild_ = 0;
      ++stats_.duplications;
      if (opts_.record_events)
        events_.push_back({t_, EventKind::Duplication, store_.doublings()});
    }
  }

  void mark_extinct() {
    extinct_ = true;
    if (opts_.record_events)
      events_.push_back({t_, EventKind::Extinction, store_.max_size()});
  }

  KernelSpec spec_;
  LambdaSchedule lambda_;
  ParticleStore store_;
  RateTable table_;
  Rng rng_;
  EngineOptions opts_;
  double t_ = 0.0;
  bool extinct_ = false;
  std::uint64_t events_since_rebuild_ = 0;
  EngineStats stats_;
  std::vector<EventRecord> events_;
};

}  // namespace aggfrag
