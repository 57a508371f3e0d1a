#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "revq/csv.hpp"
#include "revq/error.hpp"
#include "revq/losses.hpp"
#include "revq/model.hpp"
#include "revq/nn/adam.hpp"
#include "revq/rng.hpp"
#include "revq/split.hpp"
#include "revq/stats.hpp"

namespace revq {

enum class TrainStage { stream_b_pretrain_on_ts, full_on_oa };

inline std::string_view to_string(TrainStage s) {
  return s == TrainStage::stream_b_pretrain_on_ts ? "stream_b_pretrain_on_ts" : "full_on_oa";
}

struct TrainConfig {
  int batch_size = 16;
  nn::AdamParams adam;
  double alpha = kRankingWeight;
  int epochs = 0;
  std::uint64_t seed = 0;
  TrainStage stage = TrainStage::full_on_oa;
  bool freeze_stream_b = false;  // full_on_oa only
};

inline void validate(const TrainConfig& c) {
  require(c.batch_size >= 2, ErrorCode::InvalidArgument, "batch_size must be >= 2");
  require(c.alpha >= 0.0, ErrorCode::InvalidArgument, "alpha must be >= 0");
  require(c.epochs >= 0, ErrorCode::InvalidArgument, "epochs must be >= 0");
}

/// One labelled video with its precomputed network inputs.
struct TrainExample {
  VideoFeatures features;
  std::string scene_id;
  double oa_mos = 0.0;
  std::optional<double> ts_mos;
};

struct EpochLog {
  TrainStage stage = TrainStage::full_on_oa;
  int epoch = 0;
  double mean_loss = 0.0;  // over optimised batches; NaN if none
  int batches = 0;
  int skipped_batches = 0;  // constant labels or fewer than two samples
  double running_srcc = 0.0;  // predictions collected during the epoch; NaN if undefined
};

struct TrainLog {
  std::vector<EpochLog> epochs;
};

inline void write_train_log_csv(const TrainLog& log, std::ostream& out) {
  out << "stage,epoch,mean_loss,batches,skipped_batches,running_srcc\n";
  for (const auto& e : log.epochs) {
    out << to_string(e.stage) << ',' << e.epoch << ',' << csv::format_double(e.mean_loss) << ',' << e.batches << ','
        << e.skipped_batches << ',' << csv::format_double(e.running_srcc) << '\n';
  }
}

/// Model output optimised by a stage.
inline double stage_prediction(const QualityModel& model, const VideoFeatures& f, TrainStage stage) {
  return stage == TrainStage::stream_b_pretrain_on_ts ? model.stability_score(f.diff_maps) : model.score(f).q_pred;
}

inline double stage_label(const TrainExample& e, TrainStage stage) {
  if (stage == TrainStage::full_on_oa) return e.oa_mos;
  require(e.ts_mos.has_value(), ErrorCode::InvalidArgument,
          "stream_b pretraining needs ts_mos for " + e.features.video_id);
  return *e.ts_mos;
}

namespace detail {

inline double srcc_or_nan(std::span<const double> a, std::span<const double> b) {
  try {
    return spearman(a, b);
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

inline bool constant(std::span<const double> v) {
  for (double x : v) {
    if (x != v[0]) return false;
  }
  return true;
}

}  // namespace detail

/// Runs one stage on `examples` in place. Deterministic given the model, the
/// example order and config.seed.
inline TrainLog train_stage(QualityModel& model, std::span<const TrainExample* const> examples,
                            const TrainConfig& config, const std::function<void(const EpochLog&)>& on_epoch = {}) {
  validate(config);
  require(!examples.empty(), ErrorCode::EmptyTrainSet, "no training examples");
  std::vector<double> labels;
  for (const auto* e : examples) labels.push_back(stage_label(*e, config.stage));

  const bool stream_b_only = config.stage == TrainStage::stream_b_pretrain_on_ts;
  std::vector<nn::Parameter*> trainable;
  if (stream_b_only) {
    trainable = model.stream_b_parameters();
  } else {
    for (auto* p : model.scorer_parameters()) trainable.push_back(p);
    if (!config.freeze_stream_b) {
      for (auto* p : model.stream_b_parameters()) trainable.push_back(p);
    }
    for (auto* p : model.fusion_parameters()) trainable.push_back(p);
  }
  nn::Adam optimizer(trainable, config.adam);

  TrainLog log;
  const std::uint64_t stage_seed = mix_seed(config.seed, stream_b_only ? 0x7B : 0xF0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mix_seed(stage_seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(std::span<std::size_t>(order));

    EpochLog entry;
    entry.stage = config.stage;
    entry.epoch = epoch;
    double loss_sum = 0.0;
    std::vector<double> seen_pred, seen_label;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      std::vector<double> target;
      for (std::size_t i : batch) target.push_back(labels[i]);
      if (batch.size() < 2 || detail::constant(target)) {
        ++entry.skipped_batches;
        continue;
      }
      std::vector<Scores> scores(batch.size());
      std::vector<double> pred(batch.size());
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& f = examples[batch[b]]->features;
        if (stream_b_only) {
          pred[b] = model.stability_score(f.diff_maps);
        } else {
          scores[b] = model.score(f);
          pred[b] = scores[b].q_pred;
        }
      }
      const LossValue loss = total_loss(pred, target, config.alpha);
      model.zero_grad();
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& f = examples[batch[b]]->features;
        const double g = loss.grad[b];
        if (g == 0.0) continue;
        if (stream_b_only) {
          model.backward_stability(f, g);
        } else {
          const auto [g_a, g_b] = model.backward_fusion(scores[b].q_a, scores[b].q_b, g);
          model.backward_quality(f, g_a);
          if (!config.freeze_stream_b) model.backward_stability(f, g_b);
        }
      }
      optimizer.step();
      ++model.training_state().steps;
      ++entry.batches;
      loss_sum += loss.value;
      seen_pred.insert(seen_pred.end(), pred.begin(), pred.end());
      seen_label.insert(seen_label.end(), target.begin(), target.end());
    }
    entry.mean_loss =
        entry.batches > 0 ? loss_sum / entry.batches : std::numeric_limits<double>::quiet_NaN();
    entry.running_srcc = seen_pred.size() >= 2 ? detail::srcc_or_nan(seen_pred, seen_label)
                                               : std::numeric_limits<double>::quiet_NaN();
    ++model.training_state().epochs_completed;
    log.epochs.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  model.training_state().stages.emplace_back(to_string(config.stage));
  return log;
}

inline TrainLog train_stage(QualityModel& model, std::span<const TrainExample> examples, const TrainConfig& config,
                            const std::function<void(const EpochLog&)>& on_epoch = {}) {
  std::vector<const TrainExample*> ptrs;
  for (const auto& e : examples) ptrs.push_back(&e);
  return train_stage(model, ptrs, config, on_epoch);
}

/// Trains `init` on the training scenes of `split`.
inline QualityModel train(std::span<const TrainExample> dataset, const TrainConfig& config, const SplitSpec& split,
                          QualityModel init, TrainLog* log = nullptr,
                          const std::function<void(const EpochLog&)>& on_epoch = {}) {
  std::vector<const TrainExample*> subset;
  for (const auto& e : dataset) {
    if (split.is_train(e.scene_id)) subset.push_back(&e);
  }
  require(!subset.empty(), ErrorCode::EmptyTrainSet, "split has no training videos");
  TrainLog stage_log = train_stage(init, subset, config, on_epoch);
  if (log) log->epochs.insert(log->epochs.end(), stage_log.epochs.begin(), stage_log.epochs.end());
  return init;
}

/// Stream (b) pretraining on TS-MOS followed by full training on OA-MOS.
inline QualityModel train_two_stage(std::span<const TrainExample> dataset, TrainConfig pretrain, TrainConfig full,
                                    const SplitSpec& split, QualityModel init, TrainLog* log = nullptr,
                                    const std::function<void(const EpochLog&)>& on_epoch = {}) {
  pretrain.stage = TrainStage::stream_b_pretrain_on_ts;
  full.stage = TrainStage::full_on_oa;
  QualityModel m = train(dataset, pretrain, split, std::move(init), log, on_epoch);
  return train(dataset, full, split, std::move(m), log, on_epoch);
}

}  // namespace revq
