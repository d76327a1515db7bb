#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "noisy/matrix.hpp"
#include "noisy/telemetry.hpp"

namespace noisy {

struct ForestHyperparams {
  std::size_t n_trees = 300;
  std::size_t min_leaf = 1;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 = all cores; never affects the result
};

// Node of a binary tree stored in pre-order. Internal nodes send
// x[feature] <= threshold to `left`. counts = {quiet, noisy} training rows
// that reached the node.
struct TreeNode {
  static constexpr std::int32_t kLeaf = -1;

  std::int32_t feature = kLeaf;
  double threshold = 0.0;
  std::int32_t left = kLeaf;
  std::int32_t right = kLeaf;
  std::array<std::size_t, 2> counts{};
  Label label = Label::kQuiet;

  bool is_leaf() const { return feature == kLeaf; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::size_t dimension = 0;

  Label predict(std::span<const double> x) const;
  std::size_t depth() const;
  bool operator==(const DecisionTree&) const = default;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  Label tie_break = Label::kQuiet;
  std::uint64_t seed = 0;

  std::size_t dimension() const {
    return trees.empty() ? 0 : trees.front().dimension;
  }
  bool operator==(const ForestModel&) const = default;
};

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity_decrease = 0.0;

  bool operator==(const Split&) const = default;
};

// 1 - sum p_k^2. Throws std::invalid_argument when all counts are zero.
double gini_impurity(std::span<const std::size_t> counts);

// Best Gini split over every feature and every midpoint between consecutive
// distinct values; both children keep at least min_leaf rows. Ties go to the
// lowest feature index, then the lowest threshold. Empty when no split has a
// positive decrease.
std::optional<Split> best_split(const FeatureMatrix& x,
                                std::span<const Label> y,
                                std::size_t min_leaf = 1);
std::optional<Split> best_split(std::span<const Instance> instances,
                                std::size_t min_leaf = 1);

// Grows a full-depth tree on the given rows; `rows` may repeat indices
// (bootstrap samples). An empty `rows` means every row of x once.
DecisionTree grow_tree(const FeatureMatrix& x, std::span<const Label> y,
                       std::size_t min_leaf,
                       std::span<const std::size_t> rows = {});

// Bagging: tree t is grown on a size-n bootstrap drawn from substream t of
// the seed.
ForestModel train_forest(const FeatureMatrix& x, std::span<const Label> y,
                         const ForestHyperparams& h);
ForestModel train_forest(std::span<const Instance> instances,
                         const ForestHyperparams& h);

// Majority vote; an exact tie yields m.tie_break.
Label predict_forest(const ForestModel& m, std::span<const double> x);

}  // namespace noisy
