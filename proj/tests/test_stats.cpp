#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "revq/rng.hpp"
#include "revq/stats.hpp"
#include "support/oracles.hpp"

using namespace revq;

TEST(Pearson, AffinePositiveSlopeIsOne) {
  std::vector<double> x{0.3, 1.7, -2.0, 5.5, 0.0};
  std::vector<double> y;
  for (double v : x) y.push_back(2 * v + 1);
  EXPECT_NEAR(pearson(x, y), 1.0, 1e-15);
}

TEST(Pearson, NegationIsMinusOne) {
  std::vector<double> x{0.3, 1.7, -2.0, 5.5, 0.0};
  std::vector<double> y;
  for (double v : x) y.push_back(-v);
  EXPECT_NEAR(pearson(x, y), -1.0, 1e-15);
}

TEST(Pearson, MatchesOracleOnRandomVectors) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(50), y(50);
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal() + 0.3 * x[&v - y.data()];
    EXPECT_NEAR(pearson(x, y), oracle::pearson(x, y), 1e-12);
  }
}

TEST(Pearson, ConstantVectorIsDegenerate) {
  std::vector<double> x{2, 2, 2}, y{1, 2, 3};
  EXPECT_THROW(pearson(x, y), Error);
  try {
    pearson(y, x);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateInput);
  }
}

TEST(Pearson, RejectsShortOrMismatched) {
  EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{2}), Error);
  EXPECT_THROW(pearson(std::vector<double>{1, 2}, std::vector<double>{2, 3, 4}), Error);
}

TEST(Spearman, RankDifferenceExample) {
  // 1 - 6 * sum(d^2) / (n (n^2 - 1)) with d^2 = 6, n = 3
  EXPECT_NEAR(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{3, 1, 2}), -0.5, 1e-15);
}

TEST(Spearman, MonotoneTransformIsOne) {
  Rng rng(3);
  std::vector<double> x(40), y;
  for (auto& v : x) v = rng.uniform(-3, 3);
  for (double v : x) y.push_back(std::exp(v) + v * v * v);
  EXPECT_NEAR(spearman(x, y), 1.0, 1e-15);
}

TEST(Spearman, TiesMatchBruteForceRanks) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(30), y(30);
    for (auto& v : x) v = static_cast<double>(rng.uniform_int(0, 6));
    for (auto& v : y) v = static_cast<double>(rng.uniform_int(0, 4)) * 0.5;
    EXPECT_NEAR(spearman(x, y), oracle::spearman(x, y), 1e-12);
  }
}

TEST(AverageRanks, TiedValuesShareMeanRank) {
  const auto r = average_ranks(std::vector<double>{10, 20, 10, 30, 20, 20});
  EXPECT_EQ(r, (std::vector<double>{1.5, 4, 1.5, 6, 4, 4}));
}

TEST(Correlation, BoundedOnRandomInputs) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 20));
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal();
    const double p = pearson(x, y), s = spearman(x, y);
    EXPECT_GE(p, -1.0);
    EXPECT_LE(p, 1.0);
    EXPECT_GE(s, -1.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(Kurtosis, MatchesMomentRatio) {
  // Two-point symmetric distribution has kurtosis 1.
  EXPECT_NEAR(kurtosis(std::vector<double>{-1, 1, -1, 1}), 1.0, 1e-15);
  // Uniform discrete 1..5: m2 = 2, m4 = 6.8 -> 1.7
  EXPECT_NEAR(kurtosis(std::vector<double>{1, 2, 3, 4, 5}), 1.7, 1e-14);
}

TEST(Kurtosis, ConstantSampleIsDegenerate) {
  try {
    kurtosis(std::vector<double>{3, 3, 3, 3, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateSample);
  }
}

TEST(Kurtosis, NeedsFourSamples) { EXPECT_THROW(kurtosis(std::vector<double>{1, 2, 3}), Error); }

TEST(Kurtosis, UniformGridNearNineFifths) {
  std::vector<double> x(100000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i) / static_cast<double>(x.size() - 1);
  EXPECT_NEAR(kurtosis(x), 1.8, 0.05);
}

TEST(Kurtosis, GaussianDrawsNearThree) {
  Rng rng(21);
  std::vector<double> x(100000);
  for (auto& v : x) v = rng.normal();
  EXPECT_NEAR(kurtosis(x), 3.0, 0.1);
}

TEST(Kurtosis, InvariantToPositiveAffineMaps) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(100), y;
    for (auto& v : x) v = rng.uniform(-1, 1) * rng.uniform(0, 2);
    const double a = rng.uniform(0.1, 10), b = rng.uniform(-5, 5);
    for (double v : x) y.push_back(a * v + b);
    EXPECT_NEAR(kurtosis(y), kurtosis(x), 1e-9);
  }
}
