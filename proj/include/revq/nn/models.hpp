#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "revq/error.hpp"
#include "revq/nn/layers.hpp"
#include "revq/nn/tensor.hpp"
#include "revq/rng.hpp"

namespace revq::nn {

/// Stack of depthwise-separable blocks (3x3 depthwise + 1x1 pointwise) turning
/// difference maps into a single-channel per-pixel stability map. ReLU between
/// blocks, none after the last.
class DifferenceDetector {
 public:
  explicit DifferenceDetector(std::vector<int> channels = {10, 32, 32, 16, 1}) : channels_(std::move(channels)) {
    require(channels_.size() >= 2 && channels_.back() == 1, ErrorCode::InvalidArgument,
            "detector channels must end in 1");
    for (std::size_t i = 0; i + 1 < channels_.size(); ++i) {
      require(channels_[i] >= 1, ErrorCode::InvalidArgument, "detector channel counts must be positive");
      net_.add<DepthwiseConv3x3>(static_cast<std::size_t>(channels_[i]));
      net_.add<PointwiseConv>(static_cast<std::size_t>(channels_[i]), static_cast<std::size_t>(channels_[i + 1]));
      if (i + 2 < channels_.size()) net_.add<Relu>();
    }
  }

  const std::vector<int>& channels() const { return channels_; }
  std::size_t input_channels() const { return static_cast<std::size_t>(channels_.front()); }

  Tensor forward(const Tensor& maps, Sequential::Trace* trace = nullptr) const {
    require(maps.rank() == 3 && maps.channels() == input_channels(), ErrorCode::ShapeMismatch,
            "detector expects " + std::to_string(input_channels()) + " input maps, got " + shape_string(maps.shape));
    return net_.forward(maps, trace);
  }
  Tensor backward(const Sequential::Trace& trace, const Tensor& grad) { return net_.backward(trace, grad); }

  std::vector<Parameter*> parameters() { return net_.parameters(); }
  void initialize(Rng& rng) { net_.initialize(rng); }
  Sequential& net() { return net_; }

 private:
  std::vector<int> channels_;
  Sequential net_;
};

/// Fully connected regressor: Linear/ReLU pairs with a linear scalar output.
class Mlp {
 public:
  explicit Mlp(std::vector<int> widths = {16, 64, 32, 1}) : widths_(std::move(widths)) {
    require(widths_.size() >= 2, ErrorCode::InvalidArgument, "mlp needs at least input and output widths");
    for (std::size_t i = 0; i + 1 < widths_.size(); ++i) {
      require(widths_[i] >= 1 && widths_[i + 1] >= 1, ErrorCode::InvalidArgument, "mlp widths must be positive");
      net_.add<Linear>(static_cast<std::size_t>(widths_[i]), static_cast<std::size_t>(widths_[i + 1]));
      if (i + 2 < widths_.size()) net_.add<Relu>();
    }
  }

  const std::vector<int>& widths() const { return widths_; }

  Tensor forward(const Tensor& x, Sequential::Trace* trace = nullptr) const { return net_.forward(x, trace); }
  Tensor backward(const Sequential::Trace& trace, const Tensor& grad) { return net_.backward(trace, grad); }

  std::vector<Parameter*> parameters() { return net_.parameters(); }
  void initialize(Rng& rng) { net_.initialize(rng); }
  Sequential& net() { return net_; }

 private:
  std::vector<int> widths_;
  Sequential net_;
};

/// Widths of the fusion head: the stability MLP's hidden widths divided by four,
/// input fixed to (q_a, q_b), scalar output.
inline std::vector<int> quarter_widths(const std::vector<int>& stability_widths) {
  std::vector<int> out{2};
  for (std::size_t i = 1; i + 1 < stability_widths.size(); ++i) out.push_back(std::max(1, stability_widths[i] / 4));
  out.push_back(1);
  return out;
}

/// Small image-quality network over fragment frames: stages of
/// conv3x3 -> ReLU -> non-overlapping average pool, then a spatial mean.
/// Cumulative pooling strides must divide the fragment patch size so no pooling
/// window ever straddles a patch seam.
class BaselineScorer {
 public:
  explicit BaselineScorer(std::vector<int> channels = {3, 16, 32, 64}, std::vector<int> pools = {2, 2, 2})
      : channels_(std::move(channels)), pools_(std::move(pools)), head_(0, 1) {
    require(channels_.size() >= 2 && channels_.front() == 3, ErrorCode::InvalidArgument,
            "scorer channels must start at 3 (RGB)");
    require(pools_.size() + 1 == channels_.size(), ErrorCode::InvalidArgument, "one pooling window per conv stage");
    for (std::size_t i = 0; i + 1 < channels_.size(); ++i) {
      require(pools_[i] >= 1, ErrorCode::InvalidArgument, "pool windows must be positive");
      trunk_.add<Conv3x3>(static_cast<std::size_t>(channels_[i]), static_cast<std::size_t>(channels_[i + 1]));
      trunk_.add<Relu>();
      trunk_.add<AvgPool>(static_cast<std::size_t>(pools_[i]));
    }
    trunk_.add<GlobalAvgPool>();
    head_ = Linear(static_cast<std::size_t>(channels_.back()), 1);
  }

  const std::vector<int>& channels() const { return channels_; }
  const std::vector<int>& pools() const { return pools_; }

  /// Cumulative stride after each stage (in input pixels).
  std::vector<int> cumulative_strides() const {
    std::vector<int> out;
    int s = 1;
    for (int p : pools_) out.push_back(s *= p);
    return out;
  }

  /// True when every stage's pooling grid lines up with patch seams of `patch` px.
  bool seam_aligned(int patch) const {
    for (int s : cumulative_strides()) {
      if (patch % s != 0) return false;
    }
    return true;
  }

  /// Features of one (3,H,W) frame.
  Tensor frame_features(const Tensor& frame, Sequential::Trace* trace = nullptr) const {
    return trunk_.forward(frame, trace);
  }
  Tensor frame_backward(const Sequential::Trace& trace, const Tensor& grad) { return trunk_.backward(trace, grad); }

  Tensor head_forward(const Tensor& features) const { return head_.forward(features); }
  Tensor head_backward(const Tensor& features, const Tensor& grad) { return head_.backward(features, grad); }

  std::vector<Parameter*> parameters() {
    auto out = trunk_.parameters();
    for (Parameter* p : head_.parameters()) out.push_back(p);
    return out;
  }
  void initialize(Rng& rng) {
    trunk_.initialize(rng);
    head_.initialize(rng);
  }

 private:
  std::vector<int> channels_;
  std::vector<int> pools_;
  Sequential trunk_;
  Linear head_;
};

}  // namespace revq::nn
