#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "noisy/svm.hpp"
#include "support.hpp"

namespace noisy {
namespace {

using testing_support::LabeledSet;
using testing_support::random_set;

FeatureMatrix rows(std::initializer_list<std::vector<double>> r) {
  FeatureMatrix x;
  for (const auto& v : r) x.push_back(v);
  return x;
}

// Multiplier of every training row, recovered from the stored SVs.
std::vector<double> full_alphas(const SvmModel& m, const FeatureMatrix& x,
                                std::span<const Label> y) {
  std::vector<double> out(x.rows(), 0.0);
  std::vector<bool> used(m.size(), false);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t s = 0; s < m.size(); ++s) {
      if (used[s] || m.labels[s] != y[i]) continue;
      const auto sv = m.support_vectors.row(s);
      if (std::equal(sv.begin(), sv.end(), x.row(i).begin())) {
        out[i] = m.alphas[s];
        used[s] = true;
        break;
      }
    }
  }
  return out;
}

TEST(Kernel, Values) {
  const std::vector<double> u{1.0, -2.0, 0.5};
  const std::vector<double> v{1.0, -1.0, 0.5};
  EXPECT_EQ(gaussian_kernel(u, u, 0.7), 1.0);
  EXPECT_NEAR(gaussian_kernel(u, v, 1.0), 0.367879, 1e-6);
  EXPECT_EQ(gaussian_kernel(u, v, 0.0), 1.0);
  const std::vector<double> w{1.0};
  EXPECT_THROW(gaussian_kernel(u, w, 1.0), std::invalid_argument);
}

TEST(Smo, SymmetricPair) {
  const auto x = rows({{-1.0, 0.5}, {1.0, -0.5}});
  const std::vector<Label> y{Label::kQuiet, Label::kNoisy};
  for (double c : {1.0, 5.0}) {
    for (double gamma : {0.1, 1.0, 3.0}) {
      SvmHyperparams h;
      h.c = c;
      h.gamma = gamma;
      const auto m = train_smo(x, y, h, 1);
      ASSERT_EQ(m.size(), 2u);
      EXPECT_NEAR(m.alphas[0], m.alphas[1], 1e-9);
      EXPECT_NEAR(m.bias, 0.0, 1e-9);
      const std::vector<double> mid{0.0, 0.0};
      EXPECT_NEAR(decision_value(m, mid), 0.0, 1e-9);
    }
  }
}

TEST(Smo, Xor) {
  const auto x = rows({{0, 0}, {1, 1}, {0, 1}, {1, 0}});
  const std::vector<Label> y{Label::kNoisy, Label::kNoisy, Label::kQuiet,
                             Label::kQuiet};
  SvmHyperparams h;
  h.c = 10;
  h.gamma = 1;
  const auto m = train_smo(x, y, h, 3);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(predict(m, x.row(i)), y[i]);

  LabeledSet s{x, y};
  const auto ref = oracle::max_dual(s.rows(), s.signs(), h.c, h.gamma);
  const double obj = dual_objective(x, full_alphas(m, x, y), y, h.gamma);
  EXPECT_NEAR(obj, ref.objective, 1e-3 * std::abs(ref.objective));
}

TEST(Smo, SingleClassRejected) {
  const auto x = rows({{0.0}, {1.0}});
  const std::vector<Label> y{Label::kNoisy, Label::kNoisy};
  EXPECT_THROW(train_smo(x, y, SvmHyperparams{}, 0), std::invalid_argument);
}

TEST(Smo, BadHyperparams) {
  const auto x = rows({{0.0}, {1.0}});
  const std::vector<Label> y{Label::kNoisy, Label::kQuiet};
  SvmHyperparams h;
  h.c = 0;
  EXPECT_THROW(train_smo(x, y, h, 0), std::invalid_argument);
}

TEST(Smo, MatchesOracleAndSatisfiesKkt) {
  RngStream rng(2024);
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t n = 4 + rng.below(9);
    const std::size_t d = 1 + rng.below(3);
    const auto s = random_set(rng, n, d);
    SvmHyperparams h;
    h.c = rng.uniform(0.1, 20.0);
    h.gamma = rng.uniform(0.1, 3.0);
    const auto m = train_smo(s.x, s.y, h, trial);

    const auto alpha = full_alphas(m, s.x, s.y);
    double balance = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_GE(alpha[i], 0.0);
      EXPECT_LE(alpha[i], h.c);
      balance += alpha[i] * sign(s.y[i]);
    }
    EXPECT_LE(std::abs(balance), 1e-6);
    EXPECT_LE(kkt_violation(m, s.x, s.y), h.kkt_tol);

    const auto ref = oracle::max_dual(s.rows(), s.signs(), h.c, h.gamma);
    const double obj = dual_objective(s.x, alpha, s.y, h.gamma);
    EXPECT_NEAR(obj, ref.objective, 1e-3 * std::max(1.0, std::abs(ref.objective)))
        << "trial " << trial;
    EXPECT_GE(obj, 0.0);
  }
}

TEST(Smo, FreeSupportVectorsSitOnMargin) {
  RngStream rng(5);
  const auto s = random_set(rng, 40, 2);
  SvmHyperparams h;
  h.c = 2.0;
  h.gamma = 0.8;
  const auto m = train_smo(s.x, s.y, h, 9);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.alphas[i] >= h.c) continue;
    const double margin =
        sign(m.labels[i]) * decision_value(m, m.support_vectors.row(i));
    EXPECT_NEAR(margin, 1.0, h.kkt_tol);
  }
}

TEST(Smo, DeterministicForSeed) {
  RngStream rng(8);
  const auto s = random_set(rng, 60, 3);
  const auto a = train_smo(s.x, s.y, SvmHyperparams{}, 4);
  const auto b = train_smo(s.x, s.y, SvmHyperparams{}, 4);
  EXPECT_EQ(a, b);
}

TEST(Smo, TinyCacheGivesSameModel) {
  RngStream rng(12);
  const auto s = random_set(rng, 80, 3);
  SvmHyperparams small;
  small.cache_bytes = 1;
  const auto a = train_smo(s.x, s.y, SvmHyperparams{}, 2);
  const auto b = train_smo(s.x, s.y, small, 2);
  EXPECT_EQ(a.alphas, b.alphas);
  EXPECT_EQ(a.bias, b.bias);
}

TEST(Smo, ConvergenceErrorCarriesIterate) {
  RngStream rng(31);
  const auto s = random_set(rng, 30, 2);
  SvmHyperparams h;
  h.kkt_tol = 1e-300;
  h.max_passes = 1;
  try {
    train_smo(s.x, s.y, h, 0);
    FAIL() << "expected SvmConvergenceError";
  } catch (const SvmConvergenceError& e) {
    EXPECT_GT(e.best().size(), 0u);
    EXPECT_GE(e.violation(), 0.0);
  }
}

TEST(Decision, DegenerateAndTies) {
  SvmModel m;
  m.bias = 0.3;
  const std::vector<double> x{1.0, 2.0};
  EXPECT_EQ(decision_value(m, x), 0.3);
  EXPECT_EQ(predict(m, x), Label::kNoisy);
  m.bias = -0.1;
  EXPECT_EQ(predict(m, x), Label::kQuiet);
  m.bias = 0.0;
  EXPECT_EQ(predict(m, x), Label::kNoisy);
  m.bias = 2.5;
  EXPECT_EQ(predict(m, x), Label::kNoisy);

  m.support_vectors = rows({{0.0, 0.0}});
  m.alphas = {1.0};
  m.labels = {Label::kNoisy};
  const std::vector<double> wrong{1.0};
  EXPECT_THROW(decision_value(m, wrong), std::invalid_argument);
}

TEST(Dual, HandValues) {
  const auto x = rows({{0.0}, {3.0}});
  const std::vector<Label> y{Label::kNoisy, Label::kQuiet};
  const std::vector<double> zero{0.0, 0.0};
  EXPECT_EQ(dual_objective(x, zero, y, 1.0), 0.0);

  const auto one = rows({{1.5}});
  const std::vector<Label> y1{Label::kNoisy};
  const std::vector<double> a{0.7};
  EXPECT_DOUBLE_EQ(dual_objective(one, a, y1, 1.0), 0.7 - 0.7 * 0.7 / 2.0);

  const std::vector<double> bad{1.0};
  EXPECT_THROW(dual_objective(x, bad, y, 1.0), std::invalid_argument);
}

TEST(Kkt, ZeroModelAndBoundViolation) {
  const auto x = rows({{0.0}, {3.0}});
  const std::vector<Label> y{Label::kNoisy, Label::kQuiet};
  SvmModel zero;
  zero.bias = 0.25;
  zero.c = 1.0;
  // margins: 0.25 and -0.25 -> shortfalls 0.75 and 1.25
  EXPECT_DOUBLE_EQ(kkt_violation(zero, x, y), 1.25);

  // One point at the upper bound with y f(x) = 1.5.
  SvmModel m;
  m.c = 1.0;
  m.gamma = 1.0;
  m.support_vectors = rows({{0.0}});
  m.alphas = {1.0};
  m.labels = {Label::kNoisy};
  m.bias = 0.5;
  const auto single = rows({{0.0}});
  const std::vector<Label> ys{Label::kNoisy};
  EXPECT_GE(kkt_violation(m, single, ys), 0.5 - 1e-12);
}

}  // namespace
}  // namespace noisy
