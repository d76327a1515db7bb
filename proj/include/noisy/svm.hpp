#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "noisy/matrix.hpp"
#include "noisy/telemetry.hpp"

namespace noisy {

inline constexpr double kDefaultSvmC = 3.8 * 3.8;

struct SvmHyperparams {
  double c = kDefaultSvmC;
  double gamma = 1.0 / 9.0;
  double kkt_tol = 1e-3;
  double alpha_eps = 1e-12;
  int max_passes = 10;  // full passes without progress before giving up
  std::size_t cache_bytes = std::size_t{128} << 20;  // kernel row cache
};

// Soft-margin Gaussian-kernel SVM in dual form. Only multipliers with
// alpha > 0 are kept.
struct SvmModel {
  FeatureMatrix support_vectors;
  std::vector<double> alphas;  // each in (0, c]
  std::vector<Label> labels;
  double bias = 0.0;
  double gamma = 1.0;
  double c = 1.0;

  std::size_t size() const { return alphas.size(); }
  bool operator==(const SvmModel&) const = default;
};

// Thrown when SMO stalls for max_passes full passes. Carries the last
// iterate so callers can still inspect or use it.
class SvmConvergenceError : public std::runtime_error {
 public:
  SvmConvergenceError(SvmModel best, double violation)
      : std::runtime_error("SMO failed to converge (KKT violation " +
                           std::to_string(violation) + ")"),
        best_(std::move(best)),
        violation_(violation) {}

  const SvmModel& best() const { return best_; }
  double violation() const { return violation_; }

 private:
  SvmModel best_;
  double violation_;
};

// exp(-gamma * ||u - v||^2).
double gaussian_kernel(std::span<const double> u, std::span<const double> v,
                       double gamma);

// Sequential minimal optimization over the kernelized dual with the
// equality constraint sum(alpha_i y_i) = 0.
SvmModel train_smo(const FeatureMatrix& x, std::span<const Label> y,
                   const SvmHyperparams& h, std::uint64_t seed);
SvmModel train_smo(std::span<const Instance> instances,
                   const SvmHyperparams& h, std::uint64_t seed);

double decision_value(const SvmModel& m, std::span<const double> x);
// Ties (decision value exactly 0) go to kNoisy.
Label predict(const SvmModel& m, std::span<const double> x);

// sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K(x_i, x_j).
double dual_objective(const FeatureMatrix& x, std::span<const double> alphas,
                      std::span<const Label> labels, double gamma);

// Largest KKT shortfall of the model over its training points. Training
// points absent from the support vectors are taken to have alpha = 0.
double kkt_violation(const SvmModel& m, const FeatureMatrix& x,
                     std::span<const Label> y);
double kkt_violation(const SvmModel& m, std::span<const Instance> instances);

}  // namespace noisy
