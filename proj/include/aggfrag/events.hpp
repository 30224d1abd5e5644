// Event bookkeeping shared by both Monte Carlo engines.
#pragma once

#include <cstdint>
#include <vector>

namespace aggfrag {

enum class EventKind {
  Aggregation,   // value = size of the new aggregate
  Shattering,    // value = number of monomers produced
  Rejection,     // A-R trial rejected; time still advanced
  Duplication,   // value = doubling count after the event
  Extinction,    // value = size of the single surviving particle
};

inline const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::Aggregation: return "aggregation";
    case EventKind::Shattering: return "shattering";
    case EventKind::Rejection: return "rejection";
    case EventKind::Duplication: return "duplication";
    case EventKind::Extinction: return "extinction";
  }
  return "?";
}

struct EventRecord {
  double time = 0.0;
  EventKind kind = EventKind::Aggregation;
  std::uint64_t value = 0;
};

// What one engine step produced (a rejection only advances the clock).
struct StepOutcome {
  EventKind kind = EventKind::Rejection;
  std::uint64_t value = 0;
};

struct EngineStats {
  std::uint64_t trials = 0;        // pair draws, accepted or not
  std::uint64_t acceptances = 0;   // trials that produced an event
  std::uint64_t aggregations = 0;
  std::uint64_t shatterings = 0;
  std::uint64_t duplications = 0;

  double acceptance_fraction() const {
    return trials ? static_cast<double>(acceptances) / static_cast<double>(trials) : 0.0;
  }
};

struct EngineOptions {
  bool cloning = true;                          // double the population at N < N0/2
  std::uint64_t max_size_guard = 1ull << 40;    // abort if an aggregate exceeds this
  std::uint64_t rebuild_every = 1000;           // exact-rate engine: full rate rebuild cadence
  bool record_events = true;                    // keep duplication/extinction records
};

}  // namespace aggfrag
