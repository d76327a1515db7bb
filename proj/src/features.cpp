#include "noisy/features.hpp"

#include <cmath>
#include <stdexcept>

namespace noisy {
namespace {

std::vector<double> expand_if(Expansion e, std::span<const double> x) {
  if (e == Expansion::kNone) return {x.begin(), x.end()};
  const auto q = quadratic_expand(x);
  return {q.begin(), q.end()};
}

}  // namespace

Standardizer fit_standardizer(const FeatureMatrix& rows) {
  if (rows.empty()) {
    throw std::invalid_argument("fit_standardizer: no instances");
  }
  const std::size_t n = rows.rows();
  const std::size_t d = rows.cols();
  Standardizer s;
  s.means.assign(d, 0.0);
  s.stds.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) s.means[j] += rows(i, j);
  }
  for (double& m : s.means) m /= static_cast<double>(n);
  if (n < 2) return s;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = rows(i, j) - s.means[j];
      s.stds[j] += dev * dev;
    }
  }
  for (double& v : s.stds) v = std::sqrt(v / static_cast<double>(n - 1));
  return s;
}

Standardizer fit_standardizer(std::span<const Instance> instances) {
  FeatureMatrix rows;
  rows.reserve(instances.size());
  for (const auto& inst : instances) rows.push_back(inst.features);
  return fit_standardizer(rows);
}

std::vector<double> apply_standardizer(const Standardizer& s,
                                       std::span<const double> x) {
  if (x.size() != s.dimension()) {
    throw std::invalid_argument("apply_standardizer: dimension mismatch");
  }
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    out[j] = s.stds[j] > 0.0 ? (x[j] - s.means[j]) / s.stds[j] : 0.0;
  }
  return out;
}

std::array<double, kExpandedFeatures> quadratic_expand(
    std::span<const double> x) {
  if (x.size() != 3) {
    throw std::invalid_argument("quadratic_expand: expected 3 components");
  }
  return {x[0],        x[1],        x[2],        x[0] * x[0], x[1] * x[1],
          x[2] * x[2], x[0] * x[1], x[0] * x[2], x[1] * x[2]};
}

std::vector<double> Preprocessor::transform(std::span<const double> raw) const {
  if (order == PipelineOrder::kStandardizeThenExpand) {
    return expand_if(expansion, apply_standardizer(standardizer, raw));
  }
  return apply_standardizer(standardizer, expand_if(expansion, raw));
}

FeatureMatrix Preprocessor::transform(
    std::span<const Instance> instances) const {
  FeatureMatrix out(0, output_dimension());
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(transform(inst.features));
  return out;
}

Preprocessor fit_preprocessor(std::span<const Instance> instances,
                              Expansion expansion, PipelineOrder order) {
  Preprocessor p;
  p.expansion = expansion;
  p.order = order;
  if (order == PipelineOrder::kStandardizeThenExpand) {
    p.standardizer = fit_standardizer(instances);
  } else {
    if (instances.empty()) {
      throw std::invalid_argument("fit_preprocessor: no instances");
    }
    FeatureMatrix expanded;
    for (const auto& inst : instances) {
      expanded.push_back(expand_if(expansion, inst.features));
    }
    p.standardizer = fit_standardizer(expanded);
  }
  return p;
}

}  // namespace noisy
