#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>

#include "noisy/telemetry.hpp"

namespace noisy {

// Sample Pearson correlation. Throws UndefinedCorrelationError when either
// series is constant and std::invalid_argument on length < 2 or mismatch.
double pearson_correlation(std::span<const double> x, std::span<const double> y);

inline constexpr double kDefaultMicExponent = 0.6;

struct MicOptions {
  double b_exponent = kDefaultMicExponent;
  // Superclumps per column when the free axis has to be coarsened.
  std::size_t clump_factor = 5;
  // Up to this many fixed-axis partitions are enumerated exhaustively;
  // larger problems use the equipartition heuristic.
  std::size_t exact_budget = 20000;
};

// Grid budget: max(4, floor(n^b_exponent)), so 2x2 is always admissible.
std::size_t mic_grid_budget(std::size_t n, double b_exponent);

// Maximal information coefficient over grids with a, b >= 2 and a * b no
// larger than the budget. Throws std::invalid_argument for n < 4.
double mic(std::span<const double> x, std::span<const double> y,
           const MicOptions& options = {});

enum class DependenceTarget { kNoiseCpu, kBinaryLabel };

struct FeatureDependence {
  double correlation = 0.0;
  double mic = 0.0;
};

struct DependenceReport {
  std::array<FeatureDependence, kNumFeatures> features{};  // cpu, bw_in, bw_out
  std::size_t n = 0;
  DependenceTarget target = DependenceTarget::kNoiseCpu;

  std::string to_csv() const;    // stat,cpu,bw_in,bw_out
  std::string to_table() const;  // aligned plain text
};

DependenceReport feature_noise_report(
    std::span<const Window> windows,
    DependenceTarget target = DependenceTarget::kNoiseCpu,
    double noise_threshold = kDefaultNoiseThreshold,
    const MicOptions& options = {});

}  // namespace noisy
