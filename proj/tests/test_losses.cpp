#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "revq/losses.hpp"
#include "revq/rng.hpp"
#include "support/oracles.hpp"

using namespace revq;

namespace {

std::vector<double> random_batch(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

// Direct double sum, no shortcuts.
double ranking_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  const auto n = static_cast<double>(p.size());
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double sg = q[i] > q[j] ? 1.0 : (q[i] < q[j] ? -1.0 : 0.0);
      s += std::max((p[j] - p[i]) * sg, 0.0);
    }
  }
  return s / (n * n);
}

template <typename F>
std::vector<double> central_differences(F f, std::vector<double> x, double eps) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + eps;
    const double up = f(x);
    x[i] = keep - eps;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * eps);
  }
  return g;
}

}  // namespace

TEST(PlccLoss, IdenticalIsZero) {
  std::vector<double> q{1, 2.5, 3, 4.5, 2};
  EXPECT_NEAR(plcc_loss(q, q).value, 0.0, 1e-15);
}

TEST(PlccLoss, NegatedIsOne) {
  std::vector<double> q{1, 2.5, 3, 4.5, 2}, p;
  for (double v : q) p.push_back(-v);
  EXPECT_NEAR(plcc_loss(p, q).value, 1.0, 1e-15);
}

TEST(PlccLoss, ConstantPredictionsAreFlagged) {
  const auto l = plcc_loss(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3});
  EXPECT_TRUE(l.degenerate);
  EXPECT_EQ(l.value, 0.5);
  EXPECT_EQ(l.grad, (std::vector<double>{0, 0, 0}));
}

TEST(PlccLoss, GradientMatchesCentralDifferences) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_batch(rng, 16), q = random_batch(rng, 16);
    const auto analytic = plcc_loss(p, q).grad;
    const auto numeric = central_differences([&](const std::vector<double>& x) { return plcc_loss(x, q).value; }, p, 1e-6);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-8});
      EXPECT_LT(std::abs(analytic[i] - numeric[i]) / scale, 1e-5) << i;
    }
  }
}

TEST(PlccLoss, ValueMatchesCorrelationOracle) {
  Rng rng(9);
  const auto p = random_batch(rng, 16), q = random_batch(rng, 16);
  EXPECT_NEAR(plcc_loss(p, q).value, (1 - oracle::pearson(p, q)) / 2, 1e-12);
}

TEST(PlccLoss, InvariantToPositiveAffineMaps) {
  Rng rng(10);
  const auto p = random_batch(rng, 16), q = random_batch(rng, 16);
  std::vector<double> t;
  for (double v : p) t.push_back(3.5 * v - 2);
  EXPECT_NEAR(plcc_loss(t, q).value, plcc_loss(p, q).value, 1e-12);
}

TEST(RankingLoss, SwappedPairIsOneHalf) {
  EXPECT_EQ(ranking_loss(std::vector<double>{1, 2}, std::vector<double>{2, 1}).value, 0.5);
}

TEST(RankingLoss, OrderConsistentIsZero) {
  std::vector<double> q{1, 3, 2, 5}, p{0.1, 0.9, 0.5, 7};
  EXPECT_EQ(ranking_loss(p, q).value, 0.0);
}

TEST(RankingLoss, TiedTargetsContributeNothing) {
  EXPECT_EQ(ranking_loss(std::vector<double>{5, -3}, std::vector<double>{2, 2}).value, 0.0);
}

TEST(RankingLoss, MatchesDoubleSumOracle) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_batch(rng, 16), q = random_batch(rng, 16);
    EXPECT_NEAR(ranking_loss(p, q).value, ranking_oracle(p, q), 1e-12);
  }
}

TEST(RankingLoss, InvariantToShift) {
  Rng rng(13);
  const auto p = random_batch(rng, 16), q = random_batch(rng, 16);
  std::vector<double> t;
  for (double v : p) t.push_back(v + 4.25);
  EXPECT_NEAR(ranking_loss(t, q).value, ranking_loss(p, q).value, 1e-12);
}

TEST(RankingLoss, GradientMatchesCentralDifferences) {
  Rng rng(14);
  const auto p = random_batch(rng, 16), q = random_batch(rng, 16);
  const auto analytic = ranking_loss(p, q).grad;
  const auto numeric = central_differences([&](const std::vector<double>& x) { return ranking_loss(x, q).value; }, p, 1e-7);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(analytic[i], numeric[i], 1e-7) << i;
}

TEST(TotalLoss, WeightedSumOfComponents) {
  Rng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_batch(rng, 16), q = random_batch(rng, 16);
    const double expected = (1 - oracle::pearson(p, q)) / 2 + 0.3 * ranking_oracle(p, q);
    EXPECT_NEAR(total_loss(p, q).value, expected, 1e-12);
  }
}

TEST(TotalLoss, AlphaZeroEqualsPlcc) {
  Rng rng(16);
  const auto p = random_batch(rng, 8), q = random_batch(rng, 8);
  EXPECT_EQ(total_loss(p, q, 0.0).value, plcc_loss(p, q).value);
}

TEST(TotalLoss, PerfectPredictionsAreZero) {
  std::vector<double> q{1, 2, 3, 4};
  EXPECT_NEAR(total_loss(q, q).value, 0.0, 1e-15);
}

TEST(TotalLoss, RejectsNegativeAlphaAndTinyBatches) {
  EXPECT_THROW(total_loss(std::vector<double>{1, 2}, std::vector<double>{1, 2}, -0.1), Error);
  EXPECT_THROW(total_loss(std::vector<double>{1}, std::vector<double>{1}), Error);
}

TEST(Losses, BoundsOnRandomBatches) {
  Rng rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 32));
    const auto p = random_batch(rng, n), q = random_batch(rng, n);
    const double l = plcc_loss(p, q).value;
    EXPECT_GE(l, 0.0);
    EXPECT_LE(l, 1.0);
    EXPECT_GE(ranking_loss(p, q).value, 0.0);
  }
}
