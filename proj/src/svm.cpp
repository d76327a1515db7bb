#include "noisy/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "noisy/rng.hpp"

namespace noisy {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

FeatureMatrix to_matrix(std::span<const Instance> instances,
                        std::vector<Label>* labels) {
  FeatureMatrix x(0, kNumFeatures);
  x.reserve(instances.size());
  labels->reserve(instances.size());
  for (const auto& inst : instances) {
    x.push_back(inst.features);
    labels->push_back(inst.label);
  }
  return x;
}

double squared_distance(std::span<const double> u, std::span<const double> v) {
  double d = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double diff = u[j] - v[j];
    d += diff * diff;
  }
  return d;
}

// Fixed-capacity LRU of full kernel rows.
class KernelCache {
 public:
  KernelCache(const FeatureMatrix& x, double gamma, std::size_t budget_bytes)
      : x_(x), gamma_(gamma), n_(x.rows()) {
    const std::size_t row_bytes = std::max<std::size_t>(1, n_) * sizeof(double);
    capacity_ = std::clamp<std::size_t>(budget_bytes / row_bytes, 2, n_ + 1);
    // Rows are handed out by reference; the slot table must never move.
    rows_.reserve(capacity_);
    slot_of_.assign(n_, kNone);
    norms_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const auto r = x_.row(i);
      double s = 0.0;
      for (double v : r) s += v * v;
      norms_[i] = s;
    }
  }

  double entry(std::size_t i, std::size_t j) const {
    if (i == j) return 1.0;
    if (slot_of_[i] != kNone) return rows_[slot_of_[i]][j];
    if (slot_of_[j] != kNone) return rows_[slot_of_[j]][i];
    return kernel(i, j);
  }

  const std::vector<double>& row(std::size_t i) {
    ++clock_;
    if (slot_of_[i] != kNone) {
      last_used_[slot_of_[i]] = clock_;
      return rows_[slot_of_[i]];
    }
    std::size_t slot;
    if (rows_.size() < capacity_) {
      slot = rows_.size();
      rows_.emplace_back(n_);
      owner_.push_back(i);
      last_used_.push_back(clock_);
    } else {
      slot = static_cast<std::size_t>(
          std::min_element(last_used_.begin(), last_used_.end()) -
          last_used_.begin());
      slot_of_[owner_[slot]] = kNone;
      owner_[slot] = i;
      last_used_[slot] = clock_;
    }
    slot_of_[i] = slot;
    fill(i, rows_[slot]);
    return rows_[slot];
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  // Symmetric in (i, k) bit for bit, so cached and computed entries agree.
  double kernel(std::size_t i, std::size_t k) const {
    const std::size_t d = x_.cols();
    const double* xi = x_.data().data() + i * d;
    const double* xk = x_.data().data() + k * d;
    double dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) dot += xi[j] * xk[j];
    const double dist = std::max(0.0, norms_[i] + norms_[k] - 2.0 * dot);
    return std::exp(-gamma_ * dist);
  }

  void fill(std::size_t i, std::vector<double>& out) const {
    for (std::size_t k = 0; k < n_; ++k) out[k] = kernel(i, k);
    out[i] = 1.0;
  }

  const FeatureMatrix& x_;
  double gamma_;
  std::size_t n_;
  std::size_t capacity_ = 2;
  std::vector<double> norms_;
  std::vector<std::vector<double>> rows_;
  std::vector<std::size_t> owner_;
  std::vector<std::uint64_t> last_used_;
  std::vector<std::size_t> slot_of_;
  std::uint64_t clock_ = 0;
};

// Platt's SMO with a full error cache. grad_[i] holds
// F_i = sum_j alpha_j y_j K_ij - y_i, so E_i = F_i + b for any bias b and
// pair selection never depends on the bias estimate.
//
// Optimality is tracked through the bias interval: index i bounds b from
// below (b >= -F_i) when it can still move toward the positive side, and
// from above otherwise. The iterate is optimal within tol exactly when
// max(lower bounds) - min(upper bounds) <= 2 tol; the final bias is the
// midpoint of that interval.
class SmoSolver {
 public:
  SmoSolver(const FeatureMatrix& x, std::span<const Label> y,
            const SvmHyperparams& h, std::uint64_t seed)
      : x_(x),
        h_(h),
        n_(x.rows()),
        cache_(x, h.gamma, h.cache_bytes),
        rng_(RngStream(seed).substream(0x5E0)) {
    y_.reserve(n_);
    for (Label l : y) y_.push_back(sign(l));
    alpha_.assign(n_, 0.0);
    grad_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) grad_[i] = -y_[i];
    status_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) update_status(i);
  }

  SvmModel solve() {
    bool examine_all = true;
    int stalled_passes = 0;
    for (;;) {
      std::size_t changed = 0;
      if (examine_all) {
        for (std::size_t i = 0; i < n_; ++i) changed += examine(i);
      } else {
        for (std::size_t i = 0; i < n_; ++i) {
          if (is_free(i)) changed += examine(i);
        }
      }
      if (examine_all) {
        if (changed == 0) {
          refresh_bounds();
          if (gap() <= 2.0 * h_.kkt_tol) break;
          if (++stalled_passes >= h_.max_passes) {
            throw SvmConvergenceError(build_model(), gap() / 2.0);
          }
        } else {
          examine_all = false;
        }
      } else if (changed == 0) {
        examine_all = true;
      }
    }
    return build_model();
  }

 private:
  bool is_free(std::size_t i) const {
    return alpha_[i] > 0.0 && alpha_[i] < h_.c;
  }
  // b >= -F_i is required.
  bool bounds_below(std::size_t i) const {
    return y_[i] > 0 ? alpha_[i] < h_.c : alpha_[i] > 0.0;
  }
  // b <= -F_i is required.
  bool bounds_above(std::size_t i) const {
    return y_[i] > 0 ? alpha_[i] > 0.0 : alpha_[i] < h_.c;
  }

  void refresh_bounds() {
    if (!bounds_dirty_) return;
    reset_bounds();
    for (std::size_t i = 0; i < n_; ++i) track(i);
    bounds_dirty_ = false;
  }

  void reset_bounds() {
    lower_ = -kInf;
    upper_ = kInf;
    lower_idx_ = upper_idx_ = n_;
    free_min_idx_ = free_max_idx_ = n_;
    free_min_ = kInf;
    free_max_ = -kInf;
  }

  void track(std::size_t i) {
    const double f = grad_[i];
    const unsigned char st = status_[i];
    if ((st & kBelow) && -f > lower_) {
      lower_ = -f;
      lower_idx_ = i;
    }
    if ((st & kAbove) && -f < upper_) {
      upper_ = -f;
      upper_idx_ = i;
    }
    if (st & kFree) {
      if (f < free_min_) {
        free_min_ = f;
        free_min_idx_ = i;
      }
      if (f > free_max_) {
        free_max_ = f;
        free_max_idx_ = i;
      }
    }
  }

  void update_status(std::size_t i) {
    unsigned char st = 0;
    if (bounds_below(i)) st |= kBelow;
    if (bounds_above(i)) st |= kAbove;
    if (is_free(i)) st |= kFree;
    status_[i] = st;
  }

  double gap() const {
    if (lower_idx_ == n_ || upper_idx_ == n_) return 0.0;
    return std::max(0.0, lower_ - upper_);
  }

  double bias() const {
    if (lower_idx_ == n_ && upper_idx_ == n_) return 0.0;
    if (lower_idx_ == n_) return upper_;
    if (upper_idx_ == n_) return lower_;
    return 0.5 * (lower_ + upper_);
  }

  std::size_t examine(std::size_t i2) {
    refresh_bounds();
    const double v2 = -grad_[i2];
    const double tol2 = 2.0 * h_.kkt_tol;
    const bool low_violation = bounds_below(i2) && upper_idx_ != n_ &&
                               v2 > upper_ + tol2;
    const bool high_violation = bounds_above(i2) && lower_idx_ != n_ &&
                                v2 < lower_ - tol2;
    if (!low_violation && !high_violation) return 0;

    // Second choice: free multiplier maximizing |E1 - E2|, which is one of
    // the two extremes of the error cache over free multipliers.
    std::size_t best = n_;
    if (free_min_idx_ != n_) {
      const double f2 = grad_[i2];
      best = grad_[free_max_idx_] - f2 > f2 - grad_[free_min_idx_]
                 ? free_max_idx_
                 : free_min_idx_;
    }
    if (best != n_ && take_step(best, i2)) return 1;

    // The extreme index on the opposite side always forms a violating pair.
    const std::size_t partner = low_violation ? upper_idx_ : lower_idx_;
    if (partner != n_ && take_step(partner, i2)) return 1;

    if (n_ == 0) return 0;
    const std::size_t start = rng_.below(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      const std::size_t i1 = (start + k) % n_;
      if (is_free(i1) && take_step(i1, i2)) return 1;
    }
    const std::size_t start_all = rng_.below(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      const std::size_t i1 = (start_all + k) % n_;
      if (take_step(i1, i2)) return 1;
    }
    return 0;
  }

  bool take_step(std::size_t i1, std::size_t i2) {
    if (i1 == i2) return false;
    const double c = h_.c;
    const double a1 = alpha_[i1];
    const double a2 = alpha_[i2];
    const double y1 = y_[i1];
    const double y2 = y_[i2];
    const double s = y1 * y2;
    const double f1 = grad_[i1];
    const double f2 = grad_[i2];

    double lo, hi;
    if (s < 0) {
      lo = std::max(0.0, a2 - a1);
      hi = std::min(c, c + a2 - a1);
    } else {
      lo = std::max(0.0, a2 + a1 - c);
      hi = std::min(c, a1 + a2);
    }
    if (!(hi > lo)) return false;

    const double k12 = cache_.entry(i1, i2);
    const double eta = 2.0 - 2.0 * k12;
    double a2_new;
    if (eta > 1e-12) {
      a2_new = std::clamp(a2 + y2 * (f1 - f2) / eta, lo, hi);
    } else {
      // Degenerate direction: compare the objective at both ends.
      const double g1 = y1 * f1 - a1 - s * a2 * k12;
      const double g2 = y2 * f2 - s * a1 * k12 - a2;
      auto objective_at = [&](double t) {
        const double t1 = a1 + s * (a2 - t);
        return t1 * g1 + t * g2 + 0.5 * t1 * t1 + 0.5 * t * t +
               s * t * t1 * k12;
      };
      const double lo_obj = objective_at(lo);
      const double hi_obj = objective_at(hi);
      if (lo_obj < hi_obj - 1e-12) {
        a2_new = lo;
      } else if (lo_obj > hi_obj + 1e-12) {
        a2_new = hi;
      } else {
        return false;
      }
    }
    if (std::abs(a2_new - a2) < h_.alpha_eps) return false;

    double a1_new = a1 + s * (a2 - a2_new);
    const double snap = 1e-12 * c;
    if (a1_new < snap) a1_new = 0.0;
    if (a1_new > c - snap) a1_new = c;
    if (a2_new < snap) a2_new = 0.0;
    if (a2_new > c - snap) a2_new = c;

    const double d1 = y1 * (a1_new - a1);
    const double d2 = y2 * (a2_new - a2);
    const std::vector<double>& row1 = cache_.row(i1);
    const std::vector<double>& row2 = cache_.row(i2);
    alpha_[i1] = a1_new;
    alpha_[i2] = a2_new;
    update_status(i1);
    update_status(i2);
    reset_bounds();
    for (std::size_t k = 0; k < n_; ++k) {
      grad_[k] += d1 * row1[k] + d2 * row2[k];
      track(k);
    }
    bounds_dirty_ = false;
    return true;
  }

  SvmModel build_model() {
    refresh_bounds();
    SvmModel m;
    m.gamma = h_.gamma;
    m.c = h_.c;
    m.bias = bias();
    m.support_vectors = FeatureMatrix(0, x_.cols());
    for (std::size_t i = 0; i < n_; ++i) {
      if (alpha_[i] <= 0.0) continue;
      m.support_vectors.push_back(x_.row(i));
      m.alphas.push_back(alpha_[i]);
      m.labels.push_back(y_[i] > 0 ? Label::kNoisy : Label::kQuiet);
    }
    return m;
  }

  const FeatureMatrix& x_;
  SvmHyperparams h_;
  std::size_t n_;
  KernelCache cache_;
  RngStream rng_;
  std::vector<double> y_;
  std::vector<double> alpha_;
  std::vector<double> grad_;

  bool bounds_dirty_ = true;
  double lower_ = -kInf;
  double upper_ = kInf;
  std::size_t lower_idx_ = 0;
  std::size_t upper_idx_ = 0;
  std::size_t free_min_idx_ = 0;
  std::size_t free_max_idx_ = 0;
  double free_min_ = kInf;
  double free_max_ = -kInf;
  std::vector<unsigned char> status_;

  static constexpr unsigned char kBelow = 1;
  static constexpr unsigned char kAbove = 2;
  static constexpr unsigned char kFree = 4;
};

void validate(const SvmHyperparams& h) {
  if (!(h.c > 0.0) || !(h.gamma > 0.0) || !(h.kkt_tol > 0.0) ||
      !(h.alpha_eps > 0.0) || h.max_passes <= 0) {
    throw std::invalid_argument("SVM hyperparameters must be positive");
  }
}

}  // namespace

double gaussian_kernel(std::span<const double> u, std::span<const double> v,
                       double gamma) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("gaussian_kernel: dimension mismatch");
  }
  return std::exp(-gamma * squared_distance(u, v));
}

SvmModel train_smo(const FeatureMatrix& x, std::span<const Label> y,
                   const SvmHyperparams& h, std::uint64_t seed) {
  validate(h);
  if (x.rows() != y.size()) {
    throw std::invalid_argument("train_smo: feature/label count mismatch");
  }
  const bool has_pos = std::find(y.begin(), y.end(), Label::kNoisy) != y.end();
  const bool has_neg = std::find(y.begin(), y.end(), Label::kQuiet) != y.end();
  if (!has_pos || !has_neg) {
    throw std::invalid_argument("train_smo: both classes are required");
  }
  for (double v : x.data()) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("train_smo: non-finite feature");
    }
  }
  return SmoSolver(x, y, h, seed).solve();
}

SvmModel train_smo(std::span<const Instance> instances,
                   const SvmHyperparams& h, std::uint64_t seed) {
  std::vector<Label> y;
  const FeatureMatrix x = to_matrix(instances, &y);
  return train_smo(x, y, h, seed);
}

double decision_value(const SvmModel& m, std::span<const double> x) {
  if (m.size() == 0) return m.bias;
  if (x.size() != m.support_vectors.cols()) {
    throw std::invalid_argument("decision_value: dimension mismatch");
  }
  double f = m.bias;
  for (std::size_t i = 0; i < m.size(); ++i) {
    f += m.alphas[i] * sign(m.labels[i]) *
         std::exp(-m.gamma * squared_distance(m.support_vectors.row(i), x));
  }
  return f;
}

Label predict(const SvmModel& m, std::span<const double> x) {
  return decision_value(m, x) >= 0.0 ? Label::kNoisy : Label::kQuiet;
}

double dual_objective(const FeatureMatrix& x, std::span<const double> alphas,
                      std::span<const Label> labels, double gamma) {
  const std::size_t n = x.rows();
  if (alphas.size() != n || labels.size() != n) {
    throw std::invalid_argument("dual_objective: dimension mismatch");
  }
  double linear = 0.0;
  double quadratic = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    linear += alphas[i];
    if (alphas[i] == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (alphas[j] == 0.0) continue;
      quadratic += alphas[i] * alphas[j] * sign(labels[i]) * sign(labels[j]) *
                   gaussian_kernel(x.row(i), x.row(j), gamma);
    }
  }
  return linear - 0.5 * quadratic;
}

double kkt_violation(const SvmModel& m, const FeatureMatrix& x,
                     std::span<const Label> y) {
  // Match training points to stored support vectors as a multiset so
  // duplicated points each claim their own multiplier.
  std::map<std::vector<double>, std::vector<double>> pending;
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::vector<double> key(m.support_vectors.row(i).begin(),
                            m.support_vectors.row(i).end());
    key.push_back(sign(m.labels[i]));
    pending[key].push_back(m.alphas[i]);
  }
  const double at_bound = m.c * (1.0 - 1e-12);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::vector<double> key(x.row(i).begin(), x.row(i).end());
    key.push_back(sign(y[i]));
    double alpha = 0.0;
    if (auto it = pending.find(key); it != pending.end() && !it->second.empty()) {
      alpha = it->second.back();
      it->second.pop_back();
    }
    const double margin = sign(y[i]) * decision_value(m, x.row(i));
    double shortfall;
    if (alpha <= 0.0) {
      shortfall = std::max(0.0, 1.0 - margin);
    } else if (alpha >= at_bound) {
      shortfall = std::max(0.0, margin - 1.0);
    } else {
      shortfall = std::abs(margin - 1.0);
    }
    worst = std::max(worst, shortfall);
  }
  return worst;
}

double kkt_violation(const SvmModel& m, std::span<const Instance> instances) {
  std::vector<Label> y;
  const FeatureMatrix x = to_matrix(instances, &y);
  return kkt_violation(m, x, y);
}

}  // namespace noisy
