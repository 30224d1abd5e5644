#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace aggfrag {

// Number-density histogram n_k at a fixed time. Sizes are ascending and
// carry strictly positive concentrations. The metadata block records where
// the snapshot came from; zero/empty values mean "not applicable".
struct SizeDistribution {
  double time = 0.0;
  std::vector<std::uint64_t> sizes;
  std::vector<double> concentrations;

  std::string method;            // "ar", "fdsmc", "fd", or empty
  std::uint64_t seed = 0;
  std::uint64_t particle_count = 0;
  std::uint32_t doublings = 0;
};

}  // namespace aggfrag
