#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "noisy/telemetry.hpp"

namespace noisy {

enum class NoiseShape { kOneLargeVm, kManySmallVms };

// Noise VMs active on [start, end) at the given fraction of host CPU.
struct NoiseInterval {
  double start = 0.0;
  double end = 0.0;
  double intensity = 0.0;  // [0, 1]

  bool operator==(const NoiseInterval&) const = default;
};

// Offered load on [start, end) as a multiple of the nominal traffic (and
// hence of base_cpu). Outside every segment the level is 1.
struct TrafficSegment {
  double start = 0.0;
  double end = 0.0;
  double level = 1.0;

  bool operator==(const TrafficSegment&) const = default;
};

struct ScenarioConfig {
  double duration = 3600.0;       // seconds
  double sample_period = 10.0;    // seconds
  double jitter_frac = 0.0;       // one-sided uniform jitter, fraction of period
  double dropout_prob = 0.0;
  double base_cpu = 40.0;         // percent at level 1 with no noise
  double traffic_rate = 25.0;     // concurrent calls at level 1
  std::vector<NoiseInterval> noise_schedule;
  NoiseShape noise_shape = NoiseShape::kOneLargeVm;
  std::size_t noise_vm_count = 24;  // many-small-VMs only, 18..24
  double contention_gain = 0.1;
  double sensor_noise_std = 0.0;  // relative to each metric's quiet level
  std::vector<TrafficSegment> traffic_schedule;
  std::uint64_t seed = 0;

  bool operator==(const ScenarioConfig&) const = default;
};

struct GroundTruth {
  std::vector<NoiseInterval> noise_schedule;
  std::vector<double> noise_cpu;  // one per emitted sample
};

struct SimulationResult {
  std::vector<RawSample> samples;
  GroundTruth truth;
};

// Per-call bandwidth footprint of the simulated VoIP server.
inline constexpr double kBytesInPerCall = 4000.0;
inline constexpr double kBytesOutPerCall = 12000.0;

// Throws std::invalid_argument describing the first violated constraint.
void validate(const ScenarioConfig& config);

// Deterministic in config (including seed); every metric draws from its own
// substream indexed by the nominal sample number.
SimulationResult generate(const ScenarioConfig& config);

// z / (1 + z).
double saturate(double z);

// Frozen calibration: ~100 experiments of 45 minutes at varying traffic
// levels, each with one noise episode. Seed 42.
ScenarioConfig standard_benchmark_scenario();

// Flat "key = value" document; '#' starts a comment line. Intervals are
// written start:end:value and separated by commas.
ScenarioConfig parse_scenario(std::string_view text);
std::string emit_scenario(const ScenarioConfig& config);

void write_truth(std::ostream& out, const GroundTruth& truth);

}  // namespace noisy
