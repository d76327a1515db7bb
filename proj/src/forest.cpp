#include "noisy/forest.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "noisy/parallel.hpp"
#include "noisy/rng.hpp"

namespace noisy {
namespace {

using Wide = __int128;

std::size_t class_of(Label y) { return y == Label::kNoisy ? 1 : 0; }

Label majority(const std::array<std::size_t, 2>& counts) {
  return counts[1] > counts[0] ? Label::kNoisy : Label::kQuiet;
}

// Split quality up to a monotone transform: the weighted Gini decrease
// equals (score - sum_k N_k^2 / n) / n with
// score = sum_k L_k^2 / n_L + sum_k R_k^2 / n_R.
// Scores are compared exactly as fractions so ties are genuine ties.
struct Score {
  Wide num = 0;
  Wide den = 1;

  static Score of(const std::array<std::size_t, 2>& left,
                  const std::array<std::size_t, 2>& right) {
    const Wide nl = static_cast<Wide>(left[0] + left[1]);
    const Wide nr = static_cast<Wide>(right[0] + right[1]);
    const Wide sl = static_cast<Wide>(left[0]) * left[0] +
                    static_cast<Wide>(left[1]) * left[1];
    const Wide sr = static_cast<Wide>(right[0]) * right[0] +
                    static_cast<Wide>(right[1]) * right[1];
    return {sl * nr + sr * nl, nl * nr};
  }

  bool greater_than(const Score& o) const { return num * o.den > o.num * den; }
};

double gini_decrease(const std::array<std::size_t, 2>& left,
                     const std::array<std::size_t, 2>& right) {
  const std::array<std::size_t, 2> parent{left[0] + right[0],
                                          left[1] + right[1]};
  const double n = static_cast<double>(parent[0] + parent[1]);
  const double nl = static_cast<double>(left[0] + left[1]);
  const double nr = static_cast<double>(right[0] + right[1]);
  return gini_impurity(parent) - (nl / n) * gini_impurity(left) -
         (nr / n) * gini_impurity(right);
}

double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  // Adjacent doubles: keep the upper value strictly on the right.
  return mid < hi ? mid : lo;
}

// Tree induction over presorted orderings. Each node owns the range
// [begin, end) of every per-feature ordering; a split stably partitions the
// range, so sorting happens once per tree.
class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const Label> y,
              std::span<const std::size_t> rows, std::size_t min_leaf)
      : x_(x), y_(y), rows_(rows.begin(), rows.end()), min_leaf_(min_leaf) {
    if (rows_.empty()) {
      rows_.resize(x.rows());
      std::iota(rows_.begin(), rows_.end(), std::size_t{0});
    }
    const std::size_t m = rows_.size();
    order_.resize(x.cols());
    for (std::size_t f = 0; f < x.cols(); ++f) {
      auto& ord = order_[f];
      ord.resize(m);
      std::iota(ord.begin(), ord.end(), std::size_t{0});
      std::stable_sort(ord.begin(), ord.end(),
                       [&](std::size_t a, std::size_t b) {
                         return value(a, f) < value(b, f);
                       });
    }
    if (order_.empty()) {
      identity_.resize(m);
      std::iota(identity_.begin(), identity_.end(), std::size_t{0});
    }
    goes_left_.assign(m, 0);
    scratch_.resize(m);
  }

  std::optional<Split> split_range(std::size_t begin, std::size_t end,
                                   const std::array<std::size_t, 2>& total) {
    if (total[0] == 0 || total[1] == 0) return std::nullopt;
    const Score parent{static_cast<Wide>(total[0]) * total[0] +
                           static_cast<Wide>(total[1]) * total[1],
                       static_cast<Wide>(total[0] + total[1])};
    std::optional<Split> best;
    Score best_score = parent;
    for (std::size_t f = 0; f < x_.cols(); ++f) {
      const auto& ord = order_[f];
      std::array<std::size_t, 2> left{};
      for (std::size_t k = begin; k + 1 < end; ++k) {
        ++left[class_of(label(ord[k]))];
        const double here = value(ord[k], f);
        const double next = value(ord[k + 1], f);
        if (!(here < next)) continue;
        const std::size_t n_left = k + 1 - begin;
        const std::size_t n_right = end - begin - n_left;
        if (n_left < min_leaf_ || n_right < min_leaf_) continue;
        const std::array<std::size_t, 2> right{total[0] - left[0],
                                               total[1] - left[1]};
        const Score s = Score::of(left, right);
        // Strictly greater keeps the earliest (feature, threshold) on ties.
        if (s.greater_than(best_score)) {
          best_score = s;
          best = Split{f, midpoint(here, next), gini_decrease(left, right)};
        }
      }
    }
    return best;
  }

  DecisionTree build() {
    DecisionTree tree;
    tree.dimension = x_.cols();
    build_node(0, rows_.size(), tree.nodes);
    return tree;
  }

  std::size_t size() const { return rows_.size(); }

  std::array<std::size_t, 2> counts(std::size_t begin, std::size_t end) const {
    std::array<std::size_t, 2> c{};
    const auto& ord = order_.empty() ? identity_ : order_[0];
    for (std::size_t k = begin; k < end; ++k) ++c[class_of(label(ord[k]))];
    return c;
  }

 private:
  double value(std::size_t pos, std::size_t f) const {
    return x_(rows_[pos], f);
  }
  Label label(std::size_t pos) const { return y_[rows_[pos]]; }

  std::int32_t build_node(std::size_t begin, std::size_t end,
                          std::vector<TreeNode>& nodes) {
    const auto index = static_cast<std::int32_t>(nodes.size());
    nodes.emplace_back();
    const auto c = counts(begin, end);
    nodes[index].counts = c;
    nodes[index].label = majority(c);

    const std::size_t n = end - begin;
    if (n < 2 * min_leaf_ || c[0] == 0 || c[1] == 0) return index;
    const auto split = split_range(begin, end, c);
    if (!split) return index;

    const std::size_t mid = partition(begin, end, *split);
    nodes[index].feature = static_cast<std::int32_t>(split->feature);
    nodes[index].threshold = split->threshold;
    const std::int32_t left = build_node(begin, mid, nodes);
    const std::int32_t right = build_node(mid, end, nodes);
    nodes[index].left = left;
    nodes[index].right = right;
    return index;
  }

  std::size_t partition(std::size_t begin, std::size_t end, const Split& s) {
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t pos = order_[s.feature][k];
      goes_left_[pos] = value(pos, s.feature) <= s.threshold ? 1 : 0;
    }
    std::size_t mid = begin;
    for (auto& ord : order_) {
      std::size_t l = begin;
      std::size_t r = 0;
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t pos = ord[k];
        if (goes_left_[pos]) {
          ord[l++] = pos;
        } else {
          scratch_[r++] = pos;
        }
      }
      std::copy(scratch_.begin(), scratch_.begin() + r, ord.begin() + l);
      mid = l;
    }
    return mid;
  }

  const FeatureMatrix& x_;
  std::span<const Label> y_;
  std::vector<std::size_t> rows_;
  std::size_t min_leaf_;
  std::vector<std::vector<std::size_t>> order_;
  std::vector<std::size_t> identity_;
  std::vector<unsigned char> goes_left_;
  std::vector<std::size_t> scratch_;
};

void check_inputs(const FeatureMatrix& x, std::span<const Label> y) {
  if (x.rows() != y.size()) {
    throw std::invalid_argument("feature/label count mismatch");
  }
}

FeatureMatrix to_matrix(std::span<const Instance> instances,
                        std::vector<Label>* labels) {
  FeatureMatrix x(0, kNumFeatures);
  x.reserve(instances.size());
  for (const auto& inst : instances) {
    x.push_back(inst.features);
    labels->push_back(inst.label);
  }
  return x;
}

}  // namespace

double gini_impurity(std::span<const std::size_t> counts) {
  const std::size_t total =
      std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (total == 0) throw std::invalid_argument("gini_impurity: empty node");
  double sum_sq = 0.0;
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

std::optional<Split> best_split(const FeatureMatrix& x,
                                std::span<const Label> y,
                                std::size_t min_leaf) {
  check_inputs(x, y);
  if (x.rows() < 2 || x.cols() == 0) return std::nullopt;
  TreeBuilder builder(x, y, {}, std::max<std::size_t>(1, min_leaf));
  return builder.split_range(0, builder.size(),
                             builder.counts(0, builder.size()));
}

std::optional<Split> best_split(std::span<const Instance> instances,
                                std::size_t min_leaf) {
  std::vector<Label> y;
  const FeatureMatrix x = to_matrix(instances, &y);
  return best_split(x, y, min_leaf);
}

DecisionTree grow_tree(const FeatureMatrix& x, std::span<const Label> y,
                       std::size_t min_leaf,
                       std::span<const std::size_t> rows) {
  check_inputs(x, y);
  if (x.rows() == 0) throw std::invalid_argument("grow_tree: no instances");
  if (min_leaf == 0) throw std::invalid_argument("grow_tree: min_leaf is 0");
  return TreeBuilder(x, y, rows, min_leaf).build();
}

Label DecisionTree::predict(std::span<const double> x) const {
  if (x.size() != dimension) {
    throw std::invalid_argument("DecisionTree::predict: dimension mismatch");
  }
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& node = nodes[i];
    i = static_cast<std::size_t>(
        x[static_cast<std::size_t>(node.feature)] <= node.threshold
            ? node.left
            : node.right);
  }
  return nodes[i].label;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> level(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes[i].is_leaf()) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

ForestModel train_forest(const FeatureMatrix& x, std::span<const Label> y,
                         const ForestHyperparams& h) {
  check_inputs(x, y);
  if (h.n_trees == 0 || h.min_leaf == 0) {
    throw std::invalid_argument("train_forest: n_trees and min_leaf must be >= 1");
  }
  if (x.rows() == 0) throw std::invalid_argument("train_forest: no instances");
  const bool has_pos = std::find(y.begin(), y.end(), Label::kNoisy) != y.end();
  const bool has_neg = std::find(y.begin(), y.end(), Label::kQuiet) != y.end();
  if (!has_pos || !has_neg) {
    throw std::invalid_argument("train_forest: both classes are required");
  }

  ForestModel model;
  model.seed = h.seed;
  model.trees.resize(h.n_trees);
  const RngStream root(h.seed);
  const std::size_t n = x.rows();
  parallel_for(h.n_trees, h.threads, [&](std::size_t t) {
    RngStream rng = root.substream(t);
    std::vector<std::size_t> sample(n);
    for (auto& s : sample) s = rng.below(n);
    model.trees[t] = grow_tree(x, y, h.min_leaf, sample);
  });
  return model;
}

ForestModel train_forest(std::span<const Instance> instances,
                         const ForestHyperparams& h) {
  std::vector<Label> y;
  const FeatureMatrix x = to_matrix(instances, &y);
  return train_forest(x, y, h);
}

Label predict_forest(const ForestModel& m, std::span<const double> x) {
  if (m.trees.empty()) throw std::invalid_argument("predict_forest: no trees");
  if (x.size() != m.dimension()) {
    throw std::invalid_argument("predict_forest: dimension mismatch");
  }
  std::size_t noisy = 0;
  for (const auto& tree : m.trees) {
    if (tree.predict(x) == Label::kNoisy) ++noisy;
  }
  const std::size_t quiet = m.trees.size() - noisy;
  if (noisy > quiet) return Label::kNoisy;
  if (quiet > noisy) return Label::kQuiet;
  return m.tie_break;
}

}  // namespace noisy
