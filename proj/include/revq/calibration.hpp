#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "revq/error.hpp"
#include "revq/stats.hpp"

namespace revq {

/// Parameters of the four-parameter logistic g(o) = (b1 - b2) / (1 + exp(-(o - b3) / b4)) + b2.
struct LogisticParams {
  double beta1 = 0.0;  // max(subjective)
  double beta2 = 0.0;  // min(subjective)
  double beta3 = 0.0;  // mean(predictions)
  double beta4 = 0.0;  // population std(predictions) / 4

  double operator()(double o) const { return (beta1 - beta2) / (1.0 + std::exp(-(o - beta3) / beta4)) + beta2; }
};

inline LogisticParams fit_logistic(std::span<const double> predictions, std::span<const double> subjective) {
  require(!subjective.empty() && !predictions.empty(), ErrorCode::EmptyInput, "logistic_map: empty input");
  const double sd = population_std(predictions);
  require(sd > 0.0, ErrorCode::DegeneratePredictions, "logistic_map: predictions have zero spread");
  LogisticParams p;
  p.beta1 = *std::max_element(subjective.begin(), subjective.end());
  p.beta2 = *std::min_element(subjective.begin(), subjective.end());
  p.beta3 = mean(predictions);
  p.beta4 = sd / 4.0;
  return p;
}

struct MappedScores {
  std::vector<double> values;
  bool identity_fallback = false;  // predictions had zero spread
};

/// Maps raw predictions onto the subjective scale. Zero-spread predictions
/// cannot be mapped and are passed through unchanged with the fallback flag set.
inline MappedScores logistic_map(std::span<const double> predictions, std::span<const double> subjective) {
  MappedScores out;
  try {
    const LogisticParams g = fit_logistic(predictions, subjective);
    out.values.reserve(predictions.size());
    for (double o : predictions) out.values.push_back(g(o));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegeneratePredictions) throw;
    out.values.assign(predictions.begin(), predictions.end());
    out.identity_fallback = true;
  }
  return out;
}

/// Standardises predictions and re-expresses them with the reference mean and std.
inline std::vector<double> rescale_predictions(std::span<const double> preds, std::span<const double> reference) {
  const double sd = population_std(preds);
  require(sd > 0.0, ErrorCode::DegeneratePredictions, "rescale_predictions: predictions have zero spread");
  const double m = mean(preds);
  const double ref_mean = mean(reference);
  const double ref_sd = population_std(reference);
  std::vector<double> out;
  out.reserve(preds.size());
  for (double p : preds) out.push_back((p - m) / sd * ref_sd + ref_mean);
  return out;
}

}  // namespace revq
