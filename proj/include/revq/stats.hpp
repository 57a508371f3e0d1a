#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "revq/error.hpp"

namespace revq {

namespace detail {

// Sum of squared deviations that is only rounding noise around a constant.
inline bool negligible_spread(double sum_sq, double center, std::size_t n) {
  const double scale = std::max(1.0, center * center) * static_cast<double>(n);
  return sum_sq <= 1e-28 * scale;
}

}  // namespace detail

inline double mean(std::span<const double> x) {
  require(!x.empty(), ErrorCode::EmptyInput, "mean of empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Population (biased) standard deviation. Deviations are taken about the
/// first sample before centring, so a constant sample gives exactly 0.
inline double population_std(std::span<const double> x) {
  require(!x.empty(), ErrorCode::EmptyInput, "std of empty sample");
  const double x0 = x.front();
  double shift = 0.0;
  for (double v : x) shift += v - x0;
  shift /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - x0 - shift) * (v - x0 - shift);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

/// Product-moment correlation, two-pass.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), ErrorCode::DimensionMismatch, "pearson: length mismatch");
  require(x.size() >= 2, ErrorCode::DegenerateInput, "pearson: need at least two samples");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  require(!detail::negligible_spread(sxx, mx, x.size()) && !detail::negligible_spread(syy, my, y.size()),
          ErrorCode::DegenerateInput, "pearson: constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// 1-based ranks; tied values share the mean of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), ErrorCode::DimensionMismatch, "spearman: length mismatch");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

/// Non-excess kurtosis m4 / m2^2 with biased central moments (normal = 3).
inline double kurtosis(std::span<const double> samples) {
  require(samples.size() >= 4, ErrorCode::DegenerateSample, "kurtosis needs at least 4 samples");
  const double m = mean(samples);
  double m2 = 0.0, m4 = 0.0;
  for (double v : samples) {
    const double d = (v - m) * (v - m);
    m2 += d;
    m4 += d * d;
  }
  require(!detail::negligible_spread(m2, m, samples.size()), ErrorCode::DegenerateSample,
          "kurtosis of zero-variance sample");
  m2 /= static_cast<double>(samples.size());
  m4 /= static_cast<double>(samples.size());
  return m4 / (m2 * m2);
}

}  // namespace revq
