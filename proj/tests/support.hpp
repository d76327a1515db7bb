#pragma once

#include <vector>

#include "noisy/matrix.hpp"
#include "noisy/rng.hpp"
#include "noisy/telemetry.hpp"
#include "oracles/oracles.hpp"

namespace testing_support {

struct LabeledSet {
  noisy::FeatureMatrix x;
  std::vector<noisy::Label> y;

  oracle::Rows rows() const {
    oracle::Rows out;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto r = x.row(i);
      out.emplace_back(r.begin(), r.end());
    }
    return out;
  }
  std::vector<double> signs() const {
    std::vector<double> out;
    for (auto l : y) out.push_back(noisy::sign(l));
    return out;
  }
  std::vector<int> ints() const {
    std::vector<int> out;
    for (auto l : y) out.push_back(static_cast<int>(l));
    return out;
  }
};

// n rows of d uniform features with random labels; both classes present.
// When `grid` > 0 values are drawn from {0, ..., grid-1} to force ties.
inline LabeledSet random_set(noisy::RngStream& rng, std::size_t n,
                             std::size_t d, int grid = 0) {
  LabeledSet s;
  s.x = noisy::FeatureMatrix(0, d);
  std::vector<double> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : row) {
      v = grid > 0 ? static_cast<double>(rng.below(static_cast<std::uint64_t>(grid)))
                   : rng.uniform(-2.0, 2.0);
    }
    s.x.push_back(row);
    s.y.push_back(rng.bernoulli(0.5) ? noisy::Label::kNoisy : noisy::Label::kQuiet);
  }
  s.y[0] = noisy::Label::kNoisy;
  s.y[1] = noisy::Label::kQuiet;
  return s;
}

}  // namespace testing_support
