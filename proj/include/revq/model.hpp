#pragma once

// The two-stream quality model: a fragment-based image-quality scorer (q_a),
// the motion-compensated temporal-stability stream (q_b) and the fusion head.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "revq/error.hpp"
#include "revq/media.hpp"
#include "revq/motion.hpp"
#include "revq/motion_cache.hpp"
#include "revq/nn/diff_maps.hpp"
#include "revq/nn/layers.hpp"
#include "revq/nn/models.hpp"
#include "revq/rng.hpp"
#include "revq/sampling.hpp"

namespace revq {

struct ModelConfig {
  SamplerParams sampler;  // seed field unused; per-video seeds are derived at scoring time
  SubsetParams subsets;
  FlowParams flow;
  bool motion_enabled = true;
  nn::DiffMode diff_mode = nn::DiffMode::all_pairs;
  std::vector<int> detector_channels{10, 32, 32, 16, 1};
  std::vector<int> stability_widths{16, 64, 32, 1};
  std::vector<int> scorer_channels{3, 16, 32, 64};
  std::vector<int> scorer_pools{2, 2, 2};
  int pool_grid = 4;  // stability maps are pooled onto pool_grid x pool_grid
};

inline void validate(const ModelConfig& c) {
  validate(c.flow);
  require(c.detector_channels.front() == static_cast<int>(nn::diff_channel_count(c.diff_mode)),
          ErrorCode::InvalidArgument,
          "detector input channels must equal the number of difference maps (" +
              std::to_string(nn::diff_channel_count(c.diff_mode)) + ")");
  require(c.pool_grid >= 1 && c.stability_widths.front() == c.pool_grid * c.pool_grid, ErrorCode::InvalidArgument,
          "stability MLP input must equal pool_grid^2");
  require(c.subsets.height >= c.pool_grid && c.subsets.width >= c.pool_grid, ErrorCode::InvalidArgument,
          "subset crop smaller than the pooling grid");
  int stride = 1;
  for (int p : c.scorer_pools) {
    stride *= p;
    require(p >= 1 && c.sampler.patch % stride == 0, ErrorCode::InvalidArgument,
            "scorer pooling stride " + std::to_string(stride) + " does not divide patch size " +
                std::to_string(c.sampler.patch));
  }
}

/// Everything the networks consume for one video, independent of parameters.
struct VideoFeatures {
  std::string video_id;
  std::vector<nn::Tensor> fragment_frames;  // (3, n*k, n*k) each
  std::vector<nn::Tensor> diff_maps;        // (channels, h, w) per subset
};

inline SamplerParams fragment_params(const ModelConfig& c, std::uint64_t seed) {
  SamplerParams p = c.sampler;
  p.seed = mix_seed(seed, 1);
  return p;
}

inline SubsetParams subset_params(const ModelConfig& c, std::uint64_t seed) {
  SubsetParams p = c.subsets;
  p.seed = mix_seed(seed, 2);
  return p;
}

inline bool cache_matches(const MotionCache& cache, const ModelConfig& c, std::uint64_t seed) {
  return cache.seed == seed && cache.flow == c.flow && cache.crop_width == c.subsets.width &&
         cache.crop_height == c.subsets.height && cache.motion_enabled == c.motion_enabled &&
         cache.subsets.size() == static_cast<std::size_t>(c.subsets.count);
}

/// Motion for every temporal subset of a video, in the cache representation.
inline MotionCache compute_motion(const Video& video, const std::string& video_id, const ModelConfig& config,
                                  std::uint64_t seed) {
  MotionCache cache;
  cache.video_id = video_id;
  cache.seed = seed;
  cache.flow = config.flow;
  cache.crop_width = config.subsets.width;
  cache.crop_height = config.subsets.height;
  cache.motion_enabled = config.motion_enabled;
  for (const auto& subset : sample_subsets(video, subset_params(config, seed))) {
    CachedSubset c;
    c.start_frame = subset.start_frame;
    c.crop_x = subset.crop_x;
    c.crop_y = subset.crop_y;
    c.motion = config.motion_enabled ? estimate_subset_motion(subset, config.flow)
                                     : identity_motion(config.subsets.width, config.subsets.height);
    cache.subsets.push_back(std::move(c));
  }
  return cache;
}

/// Samples both stream inputs. A matching motion cache skips flow estimation;
/// a cache for other settings is ignored.
inline VideoFeatures extract_features(const Video& video, const std::string& video_id, const ModelConfig& config,
                                      std::uint64_t seed, const MotionCache* cache = nullptr) {
  validate(config);
  VideoFeatures f;
  f.video_id = video_id;
  for (const Frame& frame : sample_fragments(video, fragment_params(config, seed)).frames) {
    f.fragment_frames.push_back(nn::frame_tensor(frame));
  }
  const auto subsets = sample_subsets(video, subset_params(config, seed));
  const bool use_cache = cache != nullptr && cache_matches(*cache, config, seed);
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    SubsetMotion motion;
    if (use_cache) {
      const auto& c = cache->subsets[i];
      require(c.start_frame == subsets[i].start_frame && c.crop_x == subsets[i].crop_x &&
                  c.crop_y == subsets[i].crop_y,
              ErrorCode::MalformedCache, "motion cache does not match the sampled subsets of " + video_id);
      motion = c.motion;
    } else if (config.motion_enabled) {
      motion = estimate_subset_motion(subsets[i], config.flow);
    } else {
      motion = identity_motion(config.subsets.width, config.subsets.height);
    }
    f.diff_maps.push_back(nn::diff_maps(apply_alignment(subsets[i], motion), config.diff_mode));
  }
  return f;
}

struct Scores {
  double q_a = 0.0;
  double q_b = 0.0;
  double q_pred = 0.0;
};

struct TrainingState {
  std::uint64_t epochs_completed = 0;
  std::uint64_t steps = 0;
  std::vector<std::string> stages;  // stage names in the order they ran
};

class QualityModel {
 public:
  explicit QualityModel(ModelConfig config = {}, std::uint64_t seed = 0)
      : config_(std::move(config)),
        seed_(seed),
        scorer_(config_.scorer_channels, config_.scorer_pools),
        detector_(config_.detector_channels),
        stability_(config_.stability_widths),
        fusion_(nn::quarter_widths(config_.stability_widths)),
        pool_(static_cast<std::size_t>(config_.pool_grid), static_cast<std::size_t>(config_.pool_grid)) {
    validate(config_);
    Rng rng(mix_seed(seed, 0x1417));
    scorer_.initialize(rng);
    detector_.initialize(rng);
    stability_.initialize(rng);
    fusion_.initialize(rng);
  }

  const ModelConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  TrainingState& training_state() { return state_; }
  const TrainingState& training_state() const { return state_; }

  nn::BaselineScorer& scorer() { return scorer_; }
  nn::DifferenceDetector& detector() { return detector_; }
  nn::Mlp& stability_mlp() { return stability_; }
  nn::Mlp& fusion_mlp() { return fusion_; }
  const nn::DifferenceDetector& detector() const { return detector_; }

  // ---- forward -------------------------------------------------------------

  /// Mean over fragment frames of the scorer trunk features.
  nn::Tensor quality_features(const VideoFeatures& f) const {
    require(!f.fragment_frames.empty(), ErrorCode::EmptyInput, "no fragment frames");
    nn::Tensor acc;
    for (const auto& frame : f.fragment_frames) {
      const nn::Tensor feat = scorer_.frame_features(frame);
      if (acc.values.empty()) acc = nn::Tensor(feat.shape);
      for (std::size_t i = 0; i < feat.size(); ++i) acc.values[i] += feat.values[i];
    }
    for (double& v : acc.values) v /= static_cast<double>(f.fragment_frames.size());
    return acc;
  }

  double quality_score(const VideoFeatures& f) const { return scorer_.head_forward(quality_features(f)).values[0]; }

  /// Stability map of one subset pooled onto the fixed grid.
  nn::Tensor subset_features(const nn::Tensor& maps) const { return pool_.forward(detector_.forward(maps)); }

  /// Pooled stability features averaged over all subsets.
  nn::Tensor stability_features(std::span<const nn::Tensor> maps) const {
    require(!maps.empty(), ErrorCode::EmptyInput, "no temporal subsets");
    nn::Tensor acc = nn::Tensor::vector(static_cast<std::size_t>(config_.pool_grid * config_.pool_grid));
    for (const auto& m : maps) {
      const nn::Tensor feat = subset_features(m);
      for (std::size_t i = 0; i < feat.size(); ++i) acc.values[i] += feat.values[i];
    }
    for (double& v : acc.values) v /= static_cast<double>(maps.size());
    return acc;
  }

  double stability_score(std::span<const nn::Tensor> maps) const {
    return stability_.forward(stability_features(maps)).values[0];
  }

  double fusion_forward(double q_a, double q_b) const {
    require(std::isfinite(q_a) && std::isfinite(q_b), ErrorCode::NonFiniteInput, "fusion inputs must be finite");
    nn::Tensor in = nn::Tensor::vector(2);
    in.values = {q_a, q_b};
    return fusion_.forward(in).values[0];
  }

  Scores score(const VideoFeatures& f) const {
    Scores s;
    s.q_a = quality_score(f);
    s.q_b = stability_score(f.diff_maps);
    s.q_pred = fusion_forward(s.q_a, s.q_b);
    return s;
  }

  // ---- backward (recomputes the forward pass with traces) --------------------

  void backward_quality(const VideoFeatures& f, double grad_qa) {
    const nn::Tensor feats = quality_features(f);
    nn::Tensor g = nn::Tensor::vector(1, grad_qa);
    const nn::Tensor g_feats = scorer_.head_backward(feats, g);
    nn::Tensor g_frame = g_feats;
    for (double& v : g_frame.values) v /= static_cast<double>(f.fragment_frames.size());
    for (const auto& frame : f.fragment_frames) {
      nn::Sequential::Trace trace;
      scorer_.frame_features(frame, &trace);
      scorer_.frame_backward(trace, g_frame);
    }
  }

  void backward_stability(const VideoFeatures& f, double grad_qb) {
    const nn::Tensor feats = stability_features(f.diff_maps);
    nn::Sequential::Trace mlp_trace;
    stability_.forward(feats, &mlp_trace);
    nn::Tensor g_feats = stability_.backward(mlp_trace, nn::Tensor::vector(1, grad_qb));
    for (double& v : g_feats.values) v /= static_cast<double>(f.diff_maps.size());
    for (const auto& maps : f.diff_maps) {
      nn::Sequential::Trace trace;
      const nn::Tensor map = detector_.forward(maps, &trace);
      const nn::Tensor g_map = pool_.backward(map, g_feats);
      detector_.backward(trace, g_map);
    }
  }

  /// Returns (dq_pred/dq_a, dq_pred/dq_b) scaled by grad.
  std::pair<double, double> backward_fusion(double q_a, double q_b, double grad) {
    nn::Tensor in = nn::Tensor::vector(2);
    in.values = {q_a, q_b};
    nn::Sequential::Trace trace;
    fusion_.forward(in, &trace);
    const nn::Tensor g = fusion_.backward(trace, nn::Tensor::vector(1, grad));
    return {g.values[0], g.values[1]};
  }

  void backward_full(const VideoFeatures& f, const Scores& s, double grad_pred) {
    const auto [g_a, g_b] = backward_fusion(s.q_a, s.q_b, grad_pred);
    backward_quality(f, g_a);
    backward_stability(f, g_b);
  }

  // ---- parameters ----------------------------------------------------------

  std::vector<nn::Parameter*> scorer_parameters() { return scorer_.parameters(); }
  std::vector<nn::Parameter*> stream_b_parameters() {
    auto out = detector_.parameters();
    for (auto* p : stability_.parameters()) out.push_back(p);
    return out;
  }
  std::vector<nn::Parameter*> fusion_parameters() { return fusion_.parameters(); }

  /// All parameters in checkpoint order, each with a stable dotted name.
  std::vector<std::pair<std::string, nn::Parameter*>> named_parameters() {
    std::vector<std::pair<std::string, nn::Parameter*>> out;
    auto add = [&](const std::string& prefix, const std::vector<nn::Parameter*>& ps) {
      for (std::size_t i = 0; i < ps.size(); ++i) out.emplace_back(prefix + "." + std::to_string(i) + "." + ps[i]->name, ps[i]);
    };
    add("scorer", scorer_.parameters());
    add("detector", detector_.parameters());
    add("stability", stability_.parameters());
    add("fusion", fusion_.parameters());
    return out;
  }

  std::vector<nn::Parameter*> parameters() {
    std::vector<nn::Parameter*> out;
    for (auto& [name, p] : named_parameters()) out.push_back(p);
    return out;
  }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

 private:
  ModelConfig config_;
  std::uint64_t seed_;
  TrainingState state_;
  nn::BaselineScorer scorer_;
  nn::DifferenceDetector detector_;
  nn::Mlp stability_;
  nn::Mlp fusion_;
  nn::AdaptiveAvgPool pool_;
};

/// Stream (b) score straight from aligned subsets.
inline double stability_score(const QualityModel& model, std::span<const AlignedSubset> subsets) {
  std::vector<nn::Tensor> maps;
  maps.reserve(subsets.size());
  for (const auto& s : subsets) maps.push_back(nn::diff_maps(s, model.config().diff_mode));
  return model.stability_score(maps);
}

/// Full scoring of a decoded video; deterministic in (model, video, seed).
inline Scores score_video(const QualityModel& model, const Video& video, std::uint64_t seed,
                          const std::string& video_id = "video", const MotionCache* cache = nullptr) {
  return model.score(extract_features(video, video_id, model.config(), seed, cache));
}

}  // namespace revq
