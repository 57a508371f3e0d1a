#pragma once

// Scene-wise evaluation: one logistic map fitted over all test predictions,
// then SRCC/PLCC per scene and a weighted average across scenes.

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "revq/calibration.hpp"
#include "revq/error.hpp"
#include "revq/model.hpp"
#include "revq/split.hpp"
#include "revq/stats.hpp"
#include "revq/training.hpp"

namespace revq {

enum class SceneWeighting { test_count, uniform };

struct Prediction {
  std::string video_id;
  std::string scene_id;
  double predicted = 0.0;
  double mos = 0.0;
};

struct SceneResult {
  std::string scene_id;
  std::size_t videos = 0;
  double srcc = 0.0;
  double plcc = 0.0;
};

struct SkippedScene {
  std::string scene_id;
  std::size_t videos = 0;
  std::string reason;
};

struct Residual {
  std::string video_id;
  std::string scene_id;
  double mapped = 0.0;
  double mos = 0.0;
  double residual = 0.0;  // mapped - mos
};

struct EvalReport {
  SceneWeighting weighting = SceneWeighting::test_count;
  std::vector<SceneResult> scenes;  // sorted by scene id
  std::vector<SkippedScene> skipped;
  double weighted_srcc = 0.0;
  double weighted_plcc = 0.0;
  LogisticParams logistic;
  bool identity_fallback = false;
  std::vector<Residual> residuals;
};

inline EvalReport evaluate(std::span<const Prediction> predictions, SceneWeighting weighting = SceneWeighting::test_count) {
  require(!predictions.empty(), ErrorCode::NoEvaluableScenes, "no test predictions");
  std::vector<double> pred, mos;
  for (const auto& p : predictions) {
    require(std::isfinite(p.predicted) && std::isfinite(p.mos), ErrorCode::NonFiniteInput,
            "non-finite prediction or MOS for " + p.video_id);
    pred.push_back(p.predicted);
    mos.push_back(p.mos);
  }
  EvalReport report;
  report.weighting = weighting;
  const MappedScores mapped = logistic_map(pred, mos);
  report.identity_fallback = mapped.identity_fallback;
  if (!mapped.identity_fallback) report.logistic = fit_logistic(pred, mos);

  std::map<std::string, std::vector<std::size_t>> by_scene;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    by_scene[predictions[i].scene_id].push_back(i);
    report.residuals.push_back({predictions[i].video_id, predictions[i].scene_id, mapped.values[i], mos[i],
                                mapped.values[i] - mos[i]});
  }

  double weight_sum = 0.0;
  for (const auto& [scene, idx] : by_scene) {
    if (idx.size() < 2) {
      report.skipped.push_back({scene, idx.size(), "fewer than two test videos"});
      continue;
    }
    std::vector<double> sp, sm, sg;
    for (std::size_t i : idx) {
      sp.push_back(pred[i]);
      sm.push_back(mos[i]);
      sg.push_back(mapped.values[i]);
    }
    SceneResult r;
    r.scene_id = scene;
    r.videos = idx.size();
    try {
      r.srcc = spearman(sp, sm);
      r.plcc = pearson(sg, sm);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateInput) throw;
      report.skipped.push_back({scene, idx.size(), "constant predictions or MOS"});
      continue;
    }
    const double w = weighting == SceneWeighting::test_count ? static_cast<double>(idx.size()) : 1.0;
    report.weighted_srcc += w * r.srcc;
    report.weighted_plcc += w * r.plcc;
    weight_sum += w;
    report.scenes.push_back(r);
  }
  require(!report.scenes.empty(), ErrorCode::NoEvaluableScenes, "no scene has two or more evaluable test videos");
  report.weighted_srcc /= weight_sum;
  report.weighted_plcc /= weight_sum;
  return report;
}

/// Scores the test scenes of `split` with the full model.
inline EvalReport evaluate(const QualityModel& model, std::span<const TrainExample> dataset, const SplitSpec& split,
                           SceneWeighting weighting = SceneWeighting::test_count) {
  std::vector<Prediction> preds;
  for (const auto& e : dataset) {
    if (!split.is_test(e.scene_id)) continue;
    preds.push_back({e.features.video_id, e.scene_id, model.score(e.features).q_pred, e.oa_mos});
  }
  require(!preds.empty(), ErrorCode::NoEvaluableScenes, "split has no test videos");
  return evaluate(preds, weighting);
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["weighting"] = r.weighting == SceneWeighting::test_count ? "test_count" : "uniform";
  j["weighted"] = {{"srcc", r.weighted_srcc}, {"plcc", r.weighted_plcc}};
  j["scenes"] = nlohmann::ordered_json::array();
  for (const auto& s : r.scenes) {
    j["scenes"].push_back({{"scene_id", s.scene_id}, {"videos", s.videos}, {"srcc", s.srcc}, {"plcc", s.plcc}});
  }
  j["skipped"] = nlohmann::ordered_json::array();
  for (const auto& s : r.skipped) {
    j["skipped"].push_back({{"scene_id", s.scene_id}, {"videos", s.videos}, {"reason", s.reason}});
  }
  j["logistic"] = {{"identity_fallback", r.identity_fallback},
                   {"beta1", r.logistic.beta1},
                   {"beta2", r.logistic.beta2},
                   {"beta3", r.logistic.beta3},
                   {"beta4", r.logistic.beta4}};
  j["residuals"] = nlohmann::ordered_json::array();
  for (const auto& res : r.residuals) {
    j["residuals"].push_back({{"video_id", res.video_id},
                              {"scene_id", res.scene_id},
                              {"mapped", res.mapped},
                              {"mos", res.mos},
                              {"residual", res.residual}});
  }
  return j;
}

}  // namespace revq
