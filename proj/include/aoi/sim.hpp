#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aoi/analytic.hpp"
#include "aoi/dist.hpp"

namespace aoi {

// SplitMix64: 64-bit stream with the golden-ratio increment and murmur-style
// finalizer. Per-replication streams are decorrelated through the finalizer:
//   state0(seed, rep) = mix(seed ^ mix(0x9E3779B97F4A7C15 * (rep + 1)))
struct SplitMix64 {
  std::uint64_t state = 0;

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static SplitMix64 for_replication(std::uint64_t seed, std::uint64_t rep) {
    return {mix(seed ^ mix(0x9E3779B97F4A7C15ULL * (rep + 1)))};
  }

  std::uint64_t next() {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double next_unit() {  // uniform in [0, 1)
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }
};

struct SimConfig {
  SystemSpec spec;
  std::int64_t slots = 1000000;
  std::int64_t warmup = 10000;
  std::uint64_t seed = 1;
  int replications = 1;
};

struct SimResult {
  std::vector<double> pmf;  // pooled; pmf[n] = fraction of recorded slots
  std::vector<double> replication_means;
  double pooled_mean = 0.0;
  double std_error = 0.0;
  std::string rng_description;
};

// Slot-level walk: generations decided at slot starts from the renewal clock,
// deliveries at slot ends; the age jumps down to the delivered packet's total
// service on delivery and climbs by one otherwise.
SimResult simulate(const SimConfig& config, int threads = 1);

struct TraceStats {
  std::int64_t violations = 0;
  std::int64_t max_service_age = 0;
  std::int64_t max_clock = 0;
};

// Replays the walk while tracking the full state vector and counts one-slot
// moves that do not match the admissible transition for the realized
// generation/delivery events. Horizon capped at 1e5 slots.
TraceStats state_trace(const SimConfig& config, std::int64_t horizon);
std::int64_t state_trace_check(const SimConfig& config, std::int64_t horizon);

}  // namespace aoi
