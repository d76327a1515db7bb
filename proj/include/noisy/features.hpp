#pragma once

#include <array>
#include <span>
#include <vector>

#include "noisy/matrix.hpp"
#include "noisy/telemetry.hpp"

namespace noisy {

struct Standardizer {
  std::vector<double> means;
  std::vector<double> stds;  // sample (n - 1) standard deviations

  std::size_t dimension() const { return means.size(); }
  bool operator==(const Standardizer&) const = default;
};

// Per-column mean and sample standard deviation (0 when there is one row).
// Throws std::invalid_argument on empty input.
Standardizer fit_standardizer(std::span<const Instance> instances);
Standardizer fit_standardizer(const FeatureMatrix& rows);

// (x_j - mean_j) / std_j, or 0 where std_j == 0.
std::vector<double> apply_standardizer(const Standardizer& s,
                                       std::span<const double> x);

inline constexpr std::size_t kExpandedFeatures = 9;

// (x1, x2, x3, x1^2, x2^2, x3^2, x1x2, x1x3, x2x3).
std::array<double, kExpandedFeatures> quadratic_expand(
    std::span<const double> x);

enum class Expansion { kNone, kQuadratic };
enum class PipelineOrder { kStandardizeThenExpand, kExpandThenStandardize };

// Feature pipeline fitted on a training split and replayed on held-out data.
struct Preprocessor {
  Standardizer standardizer;
  Expansion expansion = Expansion::kNone;
  PipelineOrder order = PipelineOrder::kStandardizeThenExpand;

  std::size_t output_dimension() const {
    return expansion == Expansion::kQuadratic ? kExpandedFeatures
                                              : kNumFeatures;
  }
  std::vector<double> transform(std::span<const double> raw) const;
  FeatureMatrix transform(std::span<const Instance> instances) const;
};

Preprocessor fit_preprocessor(
    std::span<const Instance> instances, Expansion expansion,
    PipelineOrder order = PipelineOrder::kStandardizeThenExpand);

}  // namespace noisy
