// Error types thrown by the library. All inherit std::runtime_error so a CLI
// can catch one base and print the message.
#pragma once

#include <stdexcept>
#include <string>

namespace aggfrag {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SimulationError : std::runtime_error {
  explicit SimulationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericsError : std::runtime_error {
  explicit NumericsError(const std::string& msg) : std::runtime_error(msg) {}
};

// Internal consistency check that stays on in release builds. The checks are
// cheap (one branch) and sit far from the innermost loops.
#define AGGFRAG_CHECK(cond, msg)                       \
  do {                                                 \
    if (!(cond)) throw std::logic_error(msg);          \
  } while (0)

}  // namespace aggfrag
