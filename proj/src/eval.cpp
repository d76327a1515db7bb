#include "noisy/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "csv_util.hpp"
#include "noisy/errors.hpp"
#include "noisy/parallel.hpp"
#include "noisy/rng.hpp"

namespace noisy {
namespace {

constexpr std::uint64_t kFoldShuffleStream = 0xF0;
constexpr std::uint64_t kFoldSeedStream = 0xF1;

class SvmClassifier : public Classifier {
 public:
  explicit SvmClassifier(SvmModel m) : model_(std::move(m)) {}
  Label predict(std::span<const double> x) const override {
    return noisy::predict(model_, x);
  }

 private:
  SvmModel model_;
};

class ForestClassifier : public Classifier {
 public:
  explicit ForestClassifier(ForestModel m) : model_(std::move(m)) {}
  Label predict(std::span<const double> x) const override {
    return predict_forest(model_, x);
  }

 private:
  ForestModel model_;
};

class ThresholdClassifier : public Classifier {
 public:
  explicit ThresholdClassifier(ThresholdRule r) : rule_(r) {}
  Label predict(std::span<const double> x) const override {
    return rule_.apply(x);
  }

 private:
  ThresholdRule rule_;
};

std::string format_param(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::vector<std::vector<std::size_t>> deal(std::span<const std::size_t> order,
                                           std::size_t k, bool round_robin) {
  const std::size_t n = order.size();
  std::vector<std::vector<std::size_t>> folds(k);
  if (round_robin) {
    for (std::size_t i = 0; i < n; ++i) folds[i % k].push_back(order[i]);
  } else {
    std::size_t offset = 0;
    for (std::size_t f = 0; f < k; ++f) {
      const std::size_t size = n / k + (f < n % k ? 1 : 0);
      folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(offset),
                      order.begin() + static_cast<std::ptrdiff_t>(offset + size));
      offset += size;
    }
  }
  for (auto& fold : folds) std::sort(fold.begin(), fold.end());
  return folds;
}

void check_k(std::size_t n, std::size_t k) {
  if (k < 2 || k > n) {
    throw std::invalid_argument("k-fold needs 2 <= k <= n (k=" +
                                std::to_string(k) +
                                ", n=" + std::to_string(n) + ")");
  }
}

}  // namespace

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k,
                                                  std::uint64_t seed) {
  check_k(n, k);
  RngStream rng = RngStream(seed).substream(kFoldShuffleStream);
  const auto order = shuffled_indices(n, rng);
  return deal(order, k, false);
}

std::vector<std::vector<std::size_t>> stratified_kfold_split(
    std::span<const Label> labels, std::size_t k, std::uint64_t seed) {
  check_k(labels.size(), k);
  RngStream rng = RngStream(seed).substream(kFoldShuffleStream);
  const auto perm = shuffled_indices(labels.size(), rng);
  std::vector<std::size_t> order;
  order.reserve(labels.size());
  for (Label cls : {Label::kNoisy, Label::kQuiet}) {
    for (std::size_t i : perm) {
      if (labels[i] == cls) order.push_back(i);
    }
  }
  return deal(order, k, true);
}

ConfusionCounts confusion(std::span<const Label> predictions,
                          std::span<const Label> truth) {
  if (predictions.size() != truth.size()) {
    throw std::invalid_argument("confusion: length mismatch");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool pred_pos = predictions[i] == Label::kNoisy;
    const bool true_pos = truth[i] == Label::kNoisy;
    if (pred_pos && true_pos) {
      ++c.tp;
    } else if (pred_pos) {
      ++c.fp;
    } else if (true_pos) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

Metrics metrics(const ConfusionCounts& c) {
  Metrics m;
  const double tp = static_cast<double>(c.tp);
  if (c.tp + c.fp > 0) m.precision = tp / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) m.recall = tp / static_cast<double>(c.tp + c.fn);
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * (m.precision * m.recall) / (m.precision + m.recall);
  }
  return m;
}

Label ThresholdRule::apply(std::span<const double> x) const {
  if (feature >= x.size()) {
    throw std::invalid_argument("ThresholdRule: dimension mismatch");
  }
  const bool above = x[feature] > threshold;
  return above == noisy_above ? Label::kNoisy : Label::kQuiet;
}

ThresholdRule fit_threshold_rule(const FeatureMatrix& x,
                                 std::span<const Label> y) {
  if (x.rows() == 0 || x.rows() != y.size()) {
    throw std::invalid_argument("fit_threshold_rule: bad input");
  }
  const std::size_t n = x.rows();
  const std::size_t positives = static_cast<std::size_t>(
      std::count(y.begin(), y.end(), Label::kNoisy));
  ThresholdRule best;
  double best_f1 = -1.0;
  auto consider = [&](std::size_t tp, std::size_t predicted,
                      const ThresholdRule& rule) {
    const std::size_t fp = predicted - tp;
    const std::size_t fn = positives - tp;
    const double f1 = metrics({tp, fp, 0, fn}).f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      best = rule;
    }
  };

  std::vector<std::size_t> order(n);
  for (std::size_t f = 0; f < x.cols(); ++f) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                     std::size_t b) {
      return x(a, f) < x(b, f);
    });
    // Cut after position k: rows [0, k] are "below", the rest "above".
    std::size_t pos_below = 0;
    consider(positives, n, {f, x(order[0], f) - 1.0, true});
    for (std::size_t k = 0; k < n; ++k) {
      if (y[order[k]] == Label::kNoisy) ++pos_below;
      const double here = x(order[k], f);
      const bool last = k + 1 == n;
      if (!last && !(here < x(order[k + 1], f))) continue;
      const double thr = last ? here : here + (x(order[k + 1], f) - here) / 2;
      consider(positives - pos_below, n - (k + 1), {f, thr, true});
      consider(pos_below, k + 1, {f, thr, false});
    }
  }
  return best;
}

Trainer make_svm_trainer(const SvmHyperparams& h, Expansion expansion,
                         PipelineOrder order) {
  Trainer t;
  t.expansion = expansion;
  t.order = order;
  t.descriptor = "svm(C=" + format_param(h.c) +
                 ",gamma=" + format_param(h.gamma) + ",expand=" +
                 (expansion == Expansion::kQuadratic ? "quadratic" : "none") +
                 ")";
  t.fit = [h](const FeatureMatrix& x, std::span<const Label> y,
              std::uint64_t seed) -> std::unique_ptr<Classifier> {
    return std::make_unique<SvmClassifier>(train_smo(x, y, h, seed));
  };
  return t;
}

Trainer make_forest_trainer(const ForestHyperparams& h) {
  Trainer t;
  t.descriptor = "forest(trees=" + std::to_string(h.n_trees) +
                 ",min_leaf=" + std::to_string(h.min_leaf) + ")";
  t.fit = [h](const FeatureMatrix& x, std::span<const Label> y,
              std::uint64_t seed) -> std::unique_ptr<Classifier> {
    ForestHyperparams fold = h;
    fold.seed = seed;
    return std::make_unique<ForestClassifier>(train_forest(x, y, fold));
  };
  return t;
}

Trainer make_threshold_trainer() {
  Trainer t;
  t.descriptor = "single-feature-threshold";
  t.fit = [](const FeatureMatrix& x, std::span<const Label> y,
             std::uint64_t) -> std::unique_ptr<Classifier> {
    return std::make_unique<ThresholdClassifier>(fit_threshold_rule(x, y));
  };
  return t;
}

EvalReport cross_validate(const Trainer& trainer, const Dataset& dataset,
                          const CvOptions& options) {
  const auto& all = dataset.instances;
  std::vector<Label> labels;
  labels.reserve(all.size());
  for (const auto& inst : all) labels.push_back(inst.label);

  const auto folds =
      options.stratified
          ? stratified_kfold_split(labels, options.k, options.seed)
          : kfold_split(all.size(), options.k, options.seed);
  const RngStream fold_seeds = RngStream(options.seed).substream(kFoldSeedStream);

  EvalReport report;
  report.model_descriptor = trainer.descriptor;
  report.per_fold.resize(folds.size());

  parallel_for(folds.size(), options.threads, [&](std::size_t f) {
    std::vector<char> held_out(all.size(), 0);
    for (std::size_t i : folds[f]) held_out[i] = 1;
    std::vector<Instance> train;
    std::vector<Instance> test;
    train.reserve(all.size() - folds[f].size());
    test.reserve(folds[f].size());
    for (std::size_t i = 0; i < all.size(); ++i) {
      (held_out[i] ? test : train).push_back(all[i]);
    }
    std::vector<Label> train_y;
    train_y.reserve(train.size());
    for (const auto& inst : train) train_y.push_back(inst.label);
    const bool has_pos =
        std::find(train_y.begin(), train_y.end(), Label::kNoisy) != train_y.end();
    const bool has_neg =
        std::find(train_y.begin(), train_y.end(), Label::kQuiet) != train_y.end();
    if (!has_pos || !has_neg) {
      throw EvaluationError(f, "training split contains a single class");
    }

    const Preprocessor prep =
        fit_preprocessor(train, trainer.expansion, trainer.order);
    if (options.on_fold) options.on_fold(f, prep);
    const FeatureMatrix train_x = prep.transform(train);
    const auto model = trainer.fit(train_x, train_y, fold_seeds.at(f));

    std::vector<Label> predicted;
    std::vector<Label> truth;
    predicted.reserve(test.size());
    truth.reserve(test.size());
    for (const auto& inst : test) {
      predicted.push_back(model->predict(prep.transform(inst.features)));
      truth.push_back(inst.label);
    }
    report.per_fold[f] = confusion(predicted, truth);
  });

  for (const auto& c : report.per_fold) report.pooled += c;
  const Metrics m = metrics(report.pooled);
  report.precision = m.precision;
  report.recall = m.recall;
  report.f1 = m.f1;
  return report;
}

std::vector<double> default_svm_c_grid() {
  std::vector<double> grid;
  for (double root : {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.8, 4.5}) {
    grid.push_back(root * root);
  }
  return grid;
}

std::vector<std::size_t> default_tree_grid() {
  return {1, 5, 10, 25, 50, 100, 200, 300};
}

SweepCurve sweep_svm_c(const Dataset& dataset, std::span<const double> c_values,
                       double gamma, const CvOptions& options,
                       const SvmHyperparams& base) {
  for (std::size_t i = 0; i < c_values.size(); ++i) {
    if (!(c_values[i] > 0.0) || (i > 0 && !(c_values[i] > c_values[i - 1]))) {
      throw std::invalid_argument("C values must be positive and increasing");
    }
  }
  SweepCurve curve;
  for (double c : c_values) {
    SvmHyperparams h = base;
    h.c = c;
    h.gamma = gamma;
    const auto r = cross_validate(make_svm_trainer(h), dataset, options);
    curve.push_back({c, r.precision, r.recall, r.f1});
  }
  return curve;
}

SweepCurve sweep_forest_trees(const Dataset& dataset,
                              std::span<const std::size_t> tree_counts,
                              const CvOptions& options, std::size_t min_leaf) {
  for (std::size_t i = 0; i < tree_counts.size(); ++i) {
    if (tree_counts[i] < 1 || (i > 0 && tree_counts[i] <= tree_counts[i - 1])) {
      throw std::invalid_argument("tree counts must be >= 1 and increasing");
    }
  }
  SweepCurve curve;
  for (std::size_t trees : tree_counts) {
    ForestHyperparams h;
    h.n_trees = trees;
    h.min_leaf = min_leaf;
    h.threads = 1;
    const auto r = cross_validate(make_forest_trainer(h), dataset, options);
    curve.push_back({static_cast<double>(trees), r.precision, r.recall, r.f1});
  }
  return curve;
}

std::string emit_curve_csv(const SweepCurve& curve) {
  std::string out = "param,precision,recall,f1\n";
  char buf[160];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f\n", p.param,
                  p.precision, p.recall, p.f1);
    out += buf;
  }
  return out;
}

SweepCurve parse_curve_csv(std::string_view text) {
  detail::LineReader reader(text);
  detail::expect_header(reader.next(), "param,precision,recall,f1");
  SweepCurve curve;
  while (auto line = reader.next()) {
    const std::size_t no = reader.line_no();
    const auto fields = detail::split_fields(*line);
    detail::expect_columns(fields, 4, no);
    curve.push_back({detail::parse_number(fields[0], no, "param"),
                     detail::parse_number(fields[1], no, "precision"),
                     detail::parse_number(fields[2], no, "recall"),
                     detail::parse_number(fields[3], no, "f1")});
  }
  return curve;
}

}  // namespace noisy
