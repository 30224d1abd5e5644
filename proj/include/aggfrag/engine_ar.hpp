// Acceptance-rejection Monte Carlo stepper for aggregation with collisional
// shattering. Every trial draws a uniform pair, advances time by the fixed
// shift tau, and accepts with probability K/K_max; accepted pairs either
// merge or shatter into monomers.
//
// Draw order per trial (fixed; runs are bit-reproducible for a given seed):
//   1. acceptance uniform r in [0,1)
//   2. first-particle ordinal in [0,N)
//   3. second-particle ordinal in [0,N-1)
//   4. on acceptance only: event-type uniform in [0,1)
//
// lambda(t) is evaluated once per trial at the pre-shift time and reused for
// both tau and the shatter branch. Time advances on rejected trials as well.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "aggfrag/errors.hpp"
#include "aggfrag/events.hpp"
#include "aggfrag/kernels.hpp"
#include "aggfrag/lambda_schedule.hpp"
#include "aggfrag/particle_store.hpp"
#include "aggfrag/rng.hpp"

namespace aggfrag {

class ArEngine {
 public:
  ArEngine(const KernelSpec& spec, LambdaSchedule lambda, ParticleStore store,
           std::uint64_t seed, std::uint64_t stream = 0, EngineOptions opts = {})
      : spec_(spec),
        lambda_(std::move(lambda)),
        store_(std::move(store)),
        rng_(seed, stream),
        opts_(opts) {
    kmax_size_ = store_.max_size();
    k_max_ = majorant(spec_, kmax_size_ ? kmax_size_ : 1);
  }

  // tau = 2 / (n(N) * (N-1) * K_max * (1 + lambda)), n(N) = n0 * N / (N0 * 2^d).
  double time_shift() const { return time_shift_for(lambda_(t_)); }

  StepOutcome step() {
    AGGFRAG_CHECK(!extinct_ && store_.count() >= 2, "ar step: fewer than two particles");
    const double lam = lambda_(t_);
    const double tau = time_shift_for(lam);
    const double r = rng_.uniform01();
    const auto [pi, pj] = store_.sample_uniform_pair(rng_);
    t_ += tau;
    ++stats_.trials;

    const double k = evaluate(spec_, pi.size, pj.size);
    if (!(r < k / k_max_)) return {EventKind::Rejection, 0};

    ++stats_.acceptances;
    const StepOutcome out = interact(pi, pj, lam);
    post_event();
    return out;
  }

  // Run trials while the next one still lands at or before t_target.
  // Returns false once the population is extinct.
  bool advance_until(double t_target) {
    while (!extinct_) {
      if (store_.count() < 2) {
        mark_extinct();
        break;
      }
      if (t_ + time_shift() > t_target) return true;
      step();
    }
    return false;
  }

  const ParticleStore& store() const { return store_; }
  double time() const { return t_; }
  const EngineStats& stats() const { return stats_; }
  bool extinct() const { return extinct_; }
  double k_max() const { return k_max_; }
  const std::vector<EventRecord>& events() const { return events_; }

 private:
  double time_shift_for(double lam) const {
    const double n_hat = store_.density();
    const double nm1 = static_cast<double>(store_.count() - 1);
    return 2.0 / (n_hat * nm1 * k_max_ * (1.0 + lam));
  }

  StepOutcome interact(const ParticleRef& pi, const ParticleRef& pj, double lam) {
    const std::uint64_t total = pi.size + pj.size;
    const bool shatter = rng_.uniform01() < lam / (1.0 + lam);
    store_.remove_pair(pi, pj);
    if (shatter) {
      store_.insert(1, total);
      ++stats_.shatterings;
      return {EventKind::Shattering, total};
    }
    if (total > opts_.max_size_guard)
      throw SimulationError("aggregate size " + std::to_string(total) +
                            " exceeds max_size_guard");
    store_.insert(total, 1);
    ++stats_.aggregations;
    if (total > kmax_size_) {
      kmax_size_ = total;
      k_max_ = majorant(spec_, total);  // never lowered when the maximum shrinks
    }
    return {EventKind::Aggregation, total};
  }

  void post_event() {
    if (store_.count() < 2) {
      mark_extinct();
      return;
    }
    if (opts_.cloning && 2 * store_.count() < store_.initial_count()) {
      store_.duplicate_all();
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
  Rng rng_;
  EngineOptions opts_;
  double t_ = 0.0;
  double k_max_ = 0.0;
  std::uint64_t kmax_size_ = 0;
  bool extinct_ = false;
  EngineStats stats_;
  std::vector<EventRecord> events_;
};

}  // namespace aggfrag
