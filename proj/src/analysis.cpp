#include "noisy/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "noisy/errors.hpp"

namespace noisy {
namespace {

using Groups = std::vector<std::vector<std::size_t>>;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Points grouped by equal value, groups in increasing value order. Cuts may
// only fall between groups.
Groups value_groups(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  Groups groups;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k == 0 || v[order[k]] != v[order[k - 1]]) groups.emplace_back();
    groups.back().push_back(order[k]);
  }
  return groups;
}

double plogp(double count, double n) {
  if (count <= 0.0) return 0.0;
  const double p = count / n;
  return p * std::log2(p);
}

// Maps each group to one of at most `bins` mass-balanced bins, keeping tied
// values together. Returns the bin of each group; bins are numbered densely.
std::vector<std::size_t> equipartition(const Groups& groups, std::size_t n,
                                       std::size_t bins) {
  std::vector<std::size_t> bin_of(groups.size(), 0);
  std::size_t bin = 0;
  std::size_t in_bin = 0;
  std::size_t assigned = 0;
  double desired = static_cast<double>(n) / static_cast<double>(bins);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double s = static_cast<double>(groups[g].size());
    const double cur = static_cast<double>(in_bin);
    if (in_bin > 0 && bin + 1 < bins && cur + s > desired &&
        std::abs(cur + s - desired) >= std::abs(cur - desired)) {
      ++bin;
      in_bin = 0;
      desired = static_cast<double>(n - assigned) /
                static_cast<double>(bins - bin);
    }
    bin_of[g] = bin;
    in_bin += groups[g].size();
    assigned += groups[g].size();
  }
  return bin_of;
}

Groups merge_groups(const Groups& groups, const std::vector<std::size_t>& bin_of) {
  Groups merged;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (g == 0 || bin_of[g] != bin_of[g - 1]) merged.emplace_back();
    merged.back().insert(merged.back().end(), groups[g].begin(),
                         groups[g].end());
  }
  return merged;
}

// With the fixed axis binned by point_bin (fixed_bins bins), finds for every
// part count k in [2, max_parts] the largest mutual information achievable
// by cutting the free axis (given as ordered groups) into exactly k
// contiguous non-empty parts. result[k] = -inf when k parts are impossible.
std::vector<double> optimize_free_axis(const std::vector<std::size_t>& point_bin,
                                       std::size_t fixed_bins,
                                       const Groups& free_groups,
                                       std::size_t max_parts) {
  const std::size_t m = free_groups.size();
  const double n = static_cast<double>(point_bin.size());
  std::vector<double> result(max_parts + 1, kNegInf);
  if (m < 2 || max_parts < 2) return result;

  std::vector<std::vector<double>> prefix(m + 1,
                                          std::vector<double>(fixed_bins, 0.0));
  for (std::size_t g = 0; g < m; ++g) {
    prefix[g + 1] = prefix[g];
    for (std::size_t p : free_groups[g]) prefix[g + 1][point_bin[p]] += 1.0;
  }
  double fixed_entropy = 0.0;
  for (std::size_t c = 0; c < fixed_bins; ++c) {
    fixed_entropy -= plogp(prefix[m][c], n);
  }
  // term[i][j]: contribution of a part spanning groups [i, j).
  std::vector<std::vector<double>> term(m + 1, std::vector<double>(m + 1, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j <= m; ++j) {
      double t = 0.0;
      double size = 0.0;
      for (std::size_t c = 0; c < fixed_bins; ++c) {
        const double cnt = prefix[j][c] - prefix[i][c];
        t += plogp(cnt, n);
        size += cnt;
      }
      term[i][j] = t - plogp(size, n);
    }
  }
  const std::size_t parts = std::min(max_parts, m);
  std::vector<double> prev(m + 1, kNegInf);
  std::vector<double> cur(m + 1, kNegInf);
  for (std::size_t j = 1; j <= m; ++j) prev[j] = term[0][j];
  for (std::size_t k = 2; k <= parts; ++k) {
    std::fill(cur.begin(), cur.end(), kNegInf);
    for (std::size_t j = k; j <= m; ++j) {
      double best = kNegInf;
      for (std::size_t i = k - 1; i < j; ++i) {
        best = std::max(best, prev[i] + term[i][j]);
      }
      cur[j] = best;
    }
    result[k] = cur[m] + fixed_entropy;
    std::swap(prev, cur);
  }
  return result;
}

double normalized(double mi, std::size_t a, std::size_t b) {
  return mi / std::log2(static_cast<double>(std::min(a, b)));
}

// Number of ways to cut m groups into 2..max_bins parts, saturating.
std::size_t partition_count(std::size_t m, std::size_t max_bins,
                            std::size_t cap) {
  std::size_t total = 0;
  for (std::size_t a = 2; a <= std::min(max_bins, m); ++a) {
    // C(m - 1, a - 1), computed incrementally with saturation.
    double c = 1.0;
    for (std::size_t i = 1; i < a; ++i) {
      c = c * static_cast<double>(m - i) / static_cast<double>(i);
    }
    if (c > static_cast<double>(cap)) return cap + 1;
    total += static_cast<std::size_t>(std::llround(c));
    if (total > cap) return cap + 1;
  }
  return total;
}

// Exhaustive over every partition of the fixed axis, exact DP on the other.
double mic_exact(const Groups& fixed, const Groups& free_axis, std::size_t n,
                 std::size_t budget) {
  const std::size_t m = fixed.size();
  double best = 0.0;
  std::vector<std::size_t> point_bin(n, 0);
  for (std::size_t a = 2; a <= std::min(budget / 2, m); ++a) {
    const std::size_t max_parts = budget / a;
    if (max_parts < 2) break;
    // Choose a-1 of the m-1 gaps, in lexicographic order.
    std::vector<std::size_t> cuts(a - 1);
    std::iota(cuts.begin(), cuts.end(), std::size_t{1});
    for (;;) {
      std::size_t bin = 0;
      for (std::size_t g = 0; g < m; ++g) {
        if (bin < cuts.size() && g == cuts[bin]) ++bin;
        for (std::size_t p : fixed[g]) point_bin[p] = bin;
      }
      const auto mi = optimize_free_axis(point_bin, a, free_axis, max_parts);
      for (std::size_t b = 2; b < mi.size(); ++b) {
        if (mi[b] != kNegInf) best = std::max(best, normalized(mi[b], a, b));
      }
      // Next combination.
      std::size_t i = cuts.size();
      while (i > 0 && cuts[i - 1] == m - cuts.size() + i - 1) --i;
      if (i == 0) break;
      ++cuts[i - 1];
      for (std::size_t j = i; j < cuts.size(); ++j) cuts[j] = cuts[j - 1] + 1;
    }
  }
  return best;
}

// Equipartition the fixed axis, optimize the free axis over superclumps.
double mic_heuristic(const Groups& fixed, const Groups& free_axis, std::size_t n,
                     std::size_t budget, std::size_t clump_factor) {
  double best = 0.0;
  std::vector<std::size_t> point_bin(n, 0);
  for (std::size_t target = 2; target <= budget / 2; ++target) {
    const auto group_bin = equipartition(fixed, n, target);
    const std::size_t bins = group_bin.empty() ? 0 : group_bin.back() + 1;
    if (bins < 2) continue;
    for (std::size_t g = 0; g < fixed.size(); ++g) {
      for (std::size_t p : fixed[g]) point_bin[p] = group_bin[g];
    }
    const std::size_t max_parts = budget / target;
    if (max_parts < 2) continue;
    const std::size_t clumps = clump_factor * max_parts;
    const Groups coarse =
        free_axis.size() > clumps
            ? merge_groups(free_axis, equipartition(free_axis, n, clumps))
            : free_axis;
    const auto mi = optimize_free_axis(point_bin, bins, coarse, max_parts);
    for (std::size_t b = 2; b < mi.size(); ++b) {
      if (mi[b] != kNegInf) best = std::max(best, normalized(mi[b], bins, b));
    }
  }
  return best;
}

}  // namespace

double pearson_correlation(std::span<const double> x,
                           std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("pearson_correlation: length mismatch");
  }
  if (x.size() < 2) {
    throw std::invalid_argument("pearson_correlation: need at least 2 points");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedCorrelationError(
        "correlation is undefined for a constant series");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::size_t mic_grid_budget(std::size_t n, double b_exponent) {
  const auto b = static_cast<std::size_t>(
      std::floor(std::pow(static_cast<double>(n), b_exponent)));
  return std::max<std::size_t>(4, b);
}

double mic(std::span<const double> x, std::span<const double> y,
           const MicOptions& options) {
  if (x.size() != y.size()) throw std::invalid_argument("mic: length mismatch");
  if (x.size() < 4) throw std::invalid_argument("mic: need at least 4 points");
  const std::size_t n = x.size();
  const std::size_t budget = mic_grid_budget(n, options.b_exponent);
  const Groups gx = value_groups(x);
  const Groups gy = value_groups(y);
  if (gx.size() < 2 || gy.size() < 2) return 0.0;

  const std::size_t cx = partition_count(gx.size(), budget / 2,
                                         options.exact_budget);
  const std::size_t cy = partition_count(gy.size(), budget / 2,
                                         options.exact_budget);
  double best;
  if (std::min(cx, cy) <= options.exact_budget) {
    best = cx <= cy ? mic_exact(gx, gy, n, budget)
                    : mic_exact(gy, gx, n, budget);
  } else {
    best = std::max(mic_heuristic(gy, gx, n, budget, options.clump_factor),
                    mic_heuristic(gx, gy, n, budget, options.clump_factor));
  }
  return std::clamp(best, 0.0, 1.0);
}

DependenceReport feature_noise_report(std::span<const Window> windows,
                                      DependenceTarget target,
                                      double noise_threshold,
                                      const MicOptions& options) {
  if (windows.empty()) {
    throw std::invalid_argument("feature_noise_report: no windows");
  }
  std::vector<double> t;
  t.reserve(windows.size());
  for (const auto& w : windows) {
    if (target == DependenceTarget::kNoiseCpu) {
      t.push_back(w.noise_cpu);
    } else {
      t.push_back(w.noise_cpu >= noise_threshold ? 1.0 : -1.0);
    }
  }
  DependenceReport report;
  report.n = windows.size();
  report.target = target;
  std::vector<double> f(windows.size());
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    for (std::size_t i = 0; i < windows.size(); ++i) {
      f[i] = windows[i].features[j];
    }
    report.features[j].correlation = pearson_correlation(f, t);
    report.features[j].mic = mic(f, t, options);
  }
  return report;
}

std::string DependenceReport::to_csv() const {
  std::string out = "stat,cpu,bw_in,bw_out\n";
  char buf[128];
  std::snprintf(buf, sizeof(buf), "correlation,%.6f,%.6f,%.6f\n",
                features[0].correlation, features[1].correlation,
                features[2].correlation);
  out += buf;
  std::snprintf(buf, sizeof(buf), "mic,%.6f,%.6f,%.6f\n", features[0].mic,
                features[1].mic, features[2].mic);
  out += buf;
  return out;
}

std::string DependenceReport::to_table() const {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-12s %10s %10s %10s\n", "", "CPU", "BW in",
                "BW out");
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-12s %10.3f %10.3f %10.3f\n", "Correlation",
                features[0].correlation, features[1].correlation,
                features[2].correlation);
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-12s %10.3f %10.3f %10.3f\n", "MIC",
                features[0].mic, features[1].mic, features[2].mic);
  out += buf;
  std::snprintf(buf, sizeof(buf), "(n=%zu, target=%s)\n", n,
                target == DependenceTarget::kNoiseCpu ? "noise-cpu"
                                                      : "binary-label");
  out += buf;
  return out;
}

}  // namespace noisy
