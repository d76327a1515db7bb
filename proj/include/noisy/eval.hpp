#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "noisy/features.hpp"
#include "noisy/forest.hpp"
#include "noisy/matrix.hpp"
#include "noisy/svm.hpp"
#include "noisy/telemetry.hpp"

namespace noisy {

// Positive class is kNoisy.
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  bool operator==(const ConfusionCounts&) const = default;
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  std::vector<ConfusionCounts> per_fold;
  ConfusionCounts pooled;  // micro-average over folds
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::string model_descriptor;

  bool operator==(const EvalReport&) const = default;
};

struct SweepPoint {
  double param = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};
using SweepCurve = std::vector<SweepPoint>;

// Seeded shuffle cut into k folds whose sizes differ by at most one.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k,
                                                  std::uint64_t seed);
// Same, but each class is shuffled and dealt round-robin separately.
std::vector<std::vector<std::size_t>> stratified_kfold_split(
    std::span<const Label> labels, std::size_t k, std::uint64_t seed);

ConfusionCounts confusion(std::span<const Label> predictions,
                          std::span<const Label> truth);

// Any 0/0 maps to 0.
Metrics metrics(const ConfusionCounts& c);

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual Label predict(std::span<const double> x) const = 0;
};

// A training procedure plus the feature pipeline it expects. train() sees
// rows that were already standardized (and expanded) on the training split.
struct Trainer {
  using Fit = std::function<std::unique_ptr<Classifier>(
      const FeatureMatrix& x, std::span<const Label> y, std::uint64_t seed)>;

  Fit fit;
  Expansion expansion = Expansion::kNone;
  PipelineOrder order = PipelineOrder::kStandardizeThenExpand;
  std::string descriptor;
};

Trainer make_svm_trainer(const SvmHyperparams& h,
                         Expansion expansion = Expansion::kQuadratic,
                         PipelineOrder order =
                             PipelineOrder::kStandardizeThenExpand);
Trainer make_forest_trainer(const ForestHyperparams& h);
// Best single feature with one threshold and direction, chosen to maximize
// F1 on the training split.
Trainer make_threshold_trainer();

struct ThresholdRule {
  std::size_t feature = 0;
  double threshold = 0.0;
  bool noisy_above = true;  // predict kNoisy when x[feature] > threshold

  Label apply(std::span<const double> x) const;
};
ThresholdRule fit_threshold_rule(const FeatureMatrix& x,
                                 std::span<const Label> y);

struct CvOptions {
  std::size_t k = 10;
  std::uint64_t seed = 0;
  bool stratified = false;
  unsigned threads = 0;
  // Called once per fold with the pipeline fitted on that fold's training
  // split. May run concurrently for different folds.
  std::function<void(std::size_t fold, const Preprocessor&)> on_fold;
};

// Throws EvaluationError naming the first fold whose training split holds a
// single class.
EvalReport cross_validate(const Trainer& trainer, const Dataset& dataset,
                          const CvOptions& options);

std::vector<double> default_svm_c_grid();
std::vector<std::size_t> default_tree_grid();

SweepCurve sweep_svm_c(const Dataset& dataset, std::span<const double> c_values,
                       double gamma, const CvOptions& options,
                       const SvmHyperparams& base = {});
SweepCurve sweep_forest_trees(const Dataset& dataset,
                              std::span<const std::size_t> tree_counts,
                              const CvOptions& options,
                              std::size_t min_leaf = 1);

// "param,precision,recall,f1" with six decimals.
std::string emit_curve_csv(const SweepCurve& curve);
SweepCurve parse_curve_csv(std::string_view text);

}  // namespace noisy
