#pragma once

// Batch losses on predicted scores with exact gradients w.r.t. the predictions.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "revq/error.hpp"

namespace revq {

struct LossValue {
  double value = 0.0;
  std::vector<double> grad;  // d value / d prediction_i
  bool degenerate = false;   // PLCC undefined for a constant batch
};

/// (1 - pearson(pred, target)) / 2. A constant prediction (or target) batch has
/// no defined correlation; it scores 0.5 with zero gradient and is flagged.
inline LossValue plcc_loss(std::span<const double> pred, std::span<const double> target) {
  require(pred.size() == target.size(), ErrorCode::DimensionMismatch, "plcc_loss: length mismatch");
  require(pred.size() >= 2, ErrorCode::InvalidArgument, "plcc_loss: batch must hold at least two scores");
  const std::size_t n = pred.size();
  double mp = 0.0, mt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mp += pred[i];
    mt += target[i];
  }
  mp /= static_cast<double>(n);
  mt /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (pred[i] - mp) * (target[i] - mt);
    sxx += (pred[i] - mp) * (pred[i] - mp);
    syy += (target[i] - mt) * (target[i] - mt);
  }
  LossValue out;
  out.grad.assign(n, 0.0);
  const auto negligible = [n](double ss, double centre) {
    return !(ss > 1e-28 * std::max(1.0, centre * centre) * static_cast<double>(n));
  };
  if (negligible(sxx, mp) || negligible(syy, mt)) {
    out.value = 0.5;
    out.degenerate = true;
    return out;
  }
  const double denom = std::sqrt(sxx * syy);
  const double r = sxy / denom;
  out.value = (1.0 - std::clamp(r, -1.0, 1.0)) / 2.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dr = (target[i] - mt) / denom - r * (pred[i] - mp) / sxx;
    out.grad[i] = -0.5 * dr;
  }
  return out;
}

/// (1/n^2) * sum_i sum_j max((p_j - p_i) * sgn(q_i - q_j), 0); subgradient 0 at the kink.
inline LossValue ranking_loss(std::span<const double> pred, std::span<const double> target) {
  require(pred.size() == target.size(), ErrorCode::DimensionMismatch, "ranking_loss: length mismatch");
  require(pred.size() >= 2, ErrorCode::InvalidArgument, "ranking_loss: batch must hold at least two scores");
  const std::size_t n = pred.size();
  const double scale = 1.0 / static_cast<double>(n * n);
  LossValue out;
  out.grad.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double diff = target[i] - target[j];
      const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      const double term = (pred[j] - pred[i]) * sgn;
      if (term > 0.0) {
        out.value += term * scale;
        out.grad[j] += sgn * scale;
        out.grad[i] -= sgn * scale;
      }
    }
  }
  return out;
}

inline constexpr double kRankingWeight = 0.3;

/// L_PLCC + alpha * L_ranking.
inline LossValue total_loss(std::span<const double> pred, std::span<const double> target,
                            double alpha = kRankingWeight) {
  require(alpha >= 0.0, ErrorCode::InvalidArgument, "alpha must be >= 0");
  LossValue plcc = plcc_loss(pred, target);
  const LossValue rank = ranking_loss(pred, target);
  plcc.value += alpha * rank.value;
  for (std::size_t i = 0; i < plcc.grad.size(); ++i) plcc.grad[i] += alpha * rank.grad[i];
  return plcc;
}

}  // namespace revq
