#pragma once

// Layers with hand-written reverse-mode gradients. Every layer computes its
// backward pass from the saved forward input and the upstream gradient, so a
// recorded forward pass is just the list of layer inputs.

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "revq/error.hpp"
#include "revq/nn/tensor.hpp"
#include "revq/rng.hpp"

namespace revq::nn {

class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string kind() const = 0;
  virtual Tensor forward(const Tensor& x) const = 0;
  /// Accumulates parameter gradients and returns dLoss/dx.
  virtual Tensor backward(const Tensor& x, const Tensor& grad_out) = 0;
  virtual std::vector<Parameter*> parameters() { return {}; }
  virtual void initialize(Rng&) {}
  virtual std::unique_ptr<Layer> clone() const = 0;
};

namespace detail {

// He-uniform: U(-sqrt(6/fan_in), sqrt(6/fan_in)); biases start at zero.
inline void he_uniform(Tensor& t, double fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / fan_in);
  for (double& v : t.values) v = rng.uniform(-bound, bound);
}

// out[y][x] += w * in[y+dy][x+dx] over the zero-padded valid region.
inline void shifted_axpy(double* out, const double* in, double w, int h, int wd, int dy, int dx) {
  const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
  const int x0 = std::max(0, -dx), x1 = std::min(wd, wd - dx);
  for (int y = y0; y < y1; ++y) {
    double* o = out + static_cast<std::ptrdiff_t>(y) * wd;
    const double* i = in + static_cast<std::ptrdiff_t>(y + dy) * wd + dx;
    for (int x = x0; x < x1; ++x) o[x] += w * i[x];
  }
}

inline double shifted_dot(const double* g, const double* in, int h, int wd, int dy, int dx) {
  const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
  const int x0 = std::max(0, -dx), x1 = std::min(wd, wd - dx);
  double s = 0.0;
  for (int y = y0; y < y1; ++y) {
    const double* gg = g + static_cast<std::ptrdiff_t>(y) * wd;
    const double* i = in + static_cast<std::ptrdiff_t>(y + dy) * wd + dx;
    for (int x = x0; x < x1; ++x) s += gg[x] * i[x];
  }
  return s;
}

}  // namespace detail

/// Per-channel 3x3 convolution, stride 1, zero padding, no bias.
class DepthwiseConv3x3 final : public Layer {
 public:
  explicit DepthwiseConv3x3(std::size_t channels) : weight_("weight", {channels, 9}) {}

  std::string kind() const override { return "depthwise3x3"; }
  std::size_t channels() const { return weight_.value.shape[0]; }

  Tensor forward(const Tensor& x) const override {
    require(x.rank() == 3 && x.channels() == channels(), ErrorCode::ShapeMismatch, "depthwise: channel mismatch");
    Tensor y(x.shape);
    const int h = static_cast<int>(x.height()), w = static_cast<int>(x.width());
    for (std::size_t c = 0; c < channels(); ++c) {
      for (int k = 0; k < 9; ++k) {
        detail::shifted_axpy(y.channel(c), x.channel(c), weight_.value.values[c * 9 + k], h, w, k / 3 - 1, k % 3 - 1);
      }
    }
    return y;
  }

  Tensor backward(const Tensor& x, const Tensor& g) override {
    Tensor gx(x.shape);
    const int h = static_cast<int>(x.height()), w = static_cast<int>(x.width());
    for (std::size_t c = 0; c < channels(); ++c) {
      for (int k = 0; k < 9; ++k) {
        const int dy = k / 3 - 1, dx = k % 3 - 1;
        weight_.grad[c * 9 + k] += detail::shifted_dot(g.channel(c), x.channel(c), h, w, dy, dx);
        detail::shifted_axpy(gx.channel(c), g.channel(c), weight_.value.values[c * 9 + k], h, w, -dy, -dx);
      }
    }
    return gx;
  }

  std::vector<Parameter*> parameters() override { return {&weight_}; }
  void initialize(Rng& rng) override { detail::he_uniform(weight_.value, 9.0, rng); }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<DepthwiseConv3x3>(*this); }

  Parameter& weight() { return weight_; }

 private:
  Parameter weight_;
};

/// 1x1 convolution mixing channels, with bias.
class PointwiseConv final : public Layer {
 public:
  PointwiseConv(std::size_t in, std::size_t out) : weight_("weight", {out, in}), bias_("bias", {out}) {}

  std::string kind() const override { return "pointwise"; }
  std::size_t in_channels() const { return weight_.value.shape[1]; }
  std::size_t out_channels() const { return weight_.value.shape[0]; }

  Tensor forward(const Tensor& x) const override {
    require(x.rank() == 3 && x.channels() == in_channels(), ErrorCode::ShapeMismatch, "pointwise: channel mismatch");
    const std::size_t n = x.plane();
    Tensor y = Tensor::map(out_channels(), x.height(), x.width());
    for (std::size_t o = 0; o < out_channels(); ++o) {
      double* dst = y.channel(o);
      std::fill(dst, dst + n, bias_.value.values[o]);
      for (std::size_t i = 0; i < in_channels(); ++i) {
        const double wv = weight_.value.values[o * in_channels() + i];
        const double* src = x.channel(i);
        for (std::size_t p = 0; p < n; ++p) dst[p] += wv * src[p];
      }
    }
    return y;
  }

  Tensor backward(const Tensor& x, const Tensor& g) override {
    const std::size_t n = x.plane();
    Tensor gx(x.shape);
    for (std::size_t o = 0; o < out_channels(); ++o) {
      const double* go = g.channel(o);
      double gb = 0.0;
      for (std::size_t p = 0; p < n; ++p) gb += go[p];
      bias_.grad[o] += gb;
      for (std::size_t i = 0; i < in_channels(); ++i) {
        const double* src = x.channel(i);
        double gw = 0.0;
        for (std::size_t p = 0; p < n; ++p) gw += go[p] * src[p];
        weight_.grad[o * in_channels() + i] += gw;
        const double wv = weight_.value.values[o * in_channels() + i];
        double* gi = gx.channel(i);
        for (std::size_t p = 0; p < n; ++p) gi[p] += wv * go[p];
      }
    }
    return gx;
  }

  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  void initialize(Rng& rng) override {
    detail::he_uniform(weight_.value, static_cast<double>(in_channels()), rng);
    std::fill(bias_.value.values.begin(), bias_.value.values.end(), 0.0);
  }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<PointwiseConv>(*this); }

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  Parameter weight_;
  Parameter bias_;
};

/// Full 3x3 convolution, stride 1, zero padding, with bias.
class Conv3x3 final : public Layer {
 public:
  Conv3x3(std::size_t in, std::size_t out) : weight_("weight", {out, in, 9}), bias_("bias", {out}) {}

  std::string kind() const override { return "conv3x3"; }
  std::size_t in_channels() const { return weight_.value.shape[1]; }
  std::size_t out_channels() const { return weight_.value.shape[0]; }

  Tensor forward(const Tensor& x) const override {
    require(x.rank() == 3 && x.channels() == in_channels(), ErrorCode::ShapeMismatch, "conv3x3: channel mismatch");
    const int h = static_cast<int>(x.height()), w = static_cast<int>(x.width());
    Tensor y = Tensor::map(out_channels(), x.height(), x.width());
    for (std::size_t o = 0; o < out_channels(); ++o) {
      double* dst = y.channel(o);
      std::fill(dst, dst + x.plane(), bias_.value.values[o]);
      for (std::size_t i = 0; i < in_channels(); ++i) {
        for (int k = 0; k < 9; ++k) {
          detail::shifted_axpy(dst, x.channel(i), w_at(o, i, k), h, w, k / 3 - 1, k % 3 - 1);
        }
      }
    }
    return y;
  }

  Tensor backward(const Tensor& x, const Tensor& g) override {
    const int h = static_cast<int>(x.height()), w = static_cast<int>(x.width());
    Tensor gx(x.shape);
    for (std::size_t o = 0; o < out_channels(); ++o) {
      const double* go = g.channel(o);
      double gb = 0.0;
      for (std::size_t p = 0; p < g.plane(); ++p) gb += go[p];
      bias_.grad[o] += gb;
      for (std::size_t i = 0; i < in_channels(); ++i) {
        for (int k = 0; k < 9; ++k) {
          const int dy = k / 3 - 1, dx = k % 3 - 1;
          weight_.grad[(o * in_channels() + i) * 9 + static_cast<std::size_t>(k)] +=
              detail::shifted_dot(go, x.channel(i), h, w, dy, dx);
          detail::shifted_axpy(gx.channel(i), go, w_at(o, i, k), h, w, -dy, -dx);
        }
      }
    }
    return gx;
  }

  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  void initialize(Rng& rng) override {
    detail::he_uniform(weight_.value, 9.0 * static_cast<double>(in_channels()), rng);
    std::fill(bias_.value.values.begin(), bias_.value.values.end(), 0.0);
  }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv3x3>(*this); }

 private:
  double w_at(std::size_t o, std::size_t i, int k) const {
    return weight_.value.values[(o * in_channels() + i) * 9 + static_cast<std::size_t>(k)];
  }

  Parameter weight_;
  Parameter bias_;
};

class Relu final : public Layer {
 public:
  std::string kind() const override { return "relu"; }
  Tensor forward(const Tensor& x) const override {
    Tensor y = x;
    for (double& v : y.values) v = v > 0.0 ? v : 0.0;
    return y;
  }
  // Subgradient 0 at the kink.
  Tensor backward(const Tensor& x, const Tensor& g) override {
    Tensor gx = g;
    for (std::size_t i = 0; i < gx.size(); ++i) {
      if (!(x.values[i] > 0.0)) gx.values[i] = 0.0;
    }
    return gx;
  }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Relu>(*this); }
};

/// Non-overlapping average pooling: window == stride, input sides must divide.
class AvgPool final : public Layer {
 public:
  explicit AvgPool(std::size_t window) : window_(window) {
    require(window >= 1, ErrorCode::InvalidArgument, "pool window must be >= 1");
  }

  std::string kind() const override { return "avgpool"; }
  std::size_t window() const { return window_; }

  Tensor forward(const Tensor& x) const override {
    require(x.rank() == 3 && x.height() % window_ == 0 && x.width() % window_ == 0, ErrorCode::ShapeMismatch,
            "avgpool: input " + shape_string(x.shape) + " not divisible by window " + std::to_string(window_));
    const std::size_t oh = x.height() / window_, ow = x.width() / window_;
    Tensor y = Tensor::map(x.channels(), oh, ow);
    const double scale = 1.0 / static_cast<double>(window_ * window_);
    for (std::size_t c = 0; c < x.channels(); ++c) {
      for (std::size_t yy = 0; yy < x.height(); ++yy) {
        for (std::size_t xx = 0; xx < x.width(); ++xx) y.at(c, yy / window_, xx / window_) += x.at(c, yy, xx) * scale;
      }
    }
    return y;
  }

  Tensor backward(const Tensor& x, const Tensor& g) override {
    Tensor gx(x.shape);
    const double scale = 1.0 / static_cast<double>(window_ * window_);
    for (std::size_t c = 0; c < x.channels(); ++c) {
      for (std::size_t yy = 0; yy < x.height(); ++yy) {
        for (std::size_t xx = 0; xx < x.width(); ++xx) gx.at(c, yy, xx) = g.at(c, yy / window_, xx / window_) * scale;
      }
    }
    return gx;
  }

  std::unique_ptr<Layer> clone() const override { return std::make_unique<AvgPool>(*this); }

 private:
  std::size_t window_;
};

/// Average pooling onto a fixed output grid; bin i spans
/// [floor(i*H/out), ceil((i+1)*H/out)). Output is flattened to (C*out_h*out_w).
class AdaptiveAvgPool final : public Layer {
 public:
  AdaptiveAvgPool(std::size_t out_h, std::size_t out_w) : out_h_(out_h), out_w_(out_w) {}

  std::string kind() const override { return "adaptive_avgpool"; }

  Tensor forward(const Tensor& x) const override {
    require(x.rank() == 3 && x.height() >= out_h_ && x.width() >= out_w_, ErrorCode::ShapeMismatch,
            "adaptive pool: input smaller than output grid");
    Tensor y = Tensor::vector(x.channels() * out_h_ * out_w_);
    for_each_bin(x, [&](std::size_t c, std::size_t out, std::size_t yy, std::size_t xx, double scale) {
      y.values[out] += x.at(c, yy, xx) * scale;
    });
    return y;
  }

  Tensor backward(const Tensor& x, const Tensor& g) override {
    Tensor gx(x.shape);
    for_each_bin(x, [&](std::size_t c, std::size_t out, std::size_t yy, std::size_t xx, double scale) {
      gx.at(c, yy, xx) += g.values[out] * scale;
    });
    return gx;
  }

  std::unique_ptr<Layer> clone() const override { return std::make_unique<AdaptiveAvgPool>(*this); }

 private:
  template <typename Fn>
  void for_each_bin(const Tensor& x, Fn&& fn) const {
    const std::size_t h = x.height(), w = x.width();
    for (std::size_t c = 0; c < x.channels(); ++c) {
      for (std::size_t by = 0; by < out_h_; ++by) {
        const std::size_t y0 = by * h / out_h_, y1 = ((by + 1) * h + out_h_ - 1) / out_h_;
        for (std::size_t bx = 0; bx < out_w_; ++bx) {
          const std::size_t x0 = bx * w / out_w_, x1 = ((bx + 1) * w + out_w_ - 1) / out_w_;
          const double scale = 1.0 / static_cast<double>((y1 - y0) * (x1 - x0));
          const std::size_t out = (c * out_h_ + by) * out_w_ + bx;
          for (std::size_t yy = y0; yy < y1; ++yy) {
            for (std::size_t xx = x0; xx < x1; ++xx) fn(c, out, yy, xx, scale);
          }
        }
      }
    }
  }

  std::size_t out_h_;
  std::size_t out_w_;
};

/// Spatial mean per channel: (C,H,W) -> (C).
class GlobalAvgPool final : public Layer {
 public:
  std::string kind() const override { return "global_avgpool"; }
  Tensor forward(const Tensor& x) const override {
    require(x.rank() == 3, ErrorCode::ShapeMismatch, "global pool expects a map");
    Tensor y = Tensor::vector(x.channels());
    for (std::size_t c = 0; c < x.channels(); ++c) {
      const double* p = x.channel(c);
      double s = 0.0;
      for (std::size_t i = 0; i < x.plane(); ++i) s += p[i];
      y.values[c] = s / static_cast<double>(x.plane());
    }
    return y;
  }
  Tensor backward(const Tensor& x, const Tensor& g) override {
    Tensor gx(x.shape);
    for (std::size_t c = 0; c < x.channels(); ++c) {
      const double v = g.values[c] / static_cast<double>(x.plane());
      std::fill(gx.channel(c), gx.channel(c) + x.plane(), v);
    }
    return gx;
  }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<GlobalAvgPool>(*this); }
};

class Linear final : public Layer {
 public:
  Linear(std::size_t in, std::size_t out) : weight_("weight", {out, in}), bias_("bias", {out}) {}

  std::string kind() const override { return "linear"; }
  std::size_t in_features() const { return weight_.value.shape[1]; }
  std::size_t out_features() const { return weight_.value.shape[0]; }

  Tensor forward(const Tensor& x) const override {
    expect_shape(x, {in_features()}, "linear");
    Tensor y = Tensor::vector(out_features());
    for (std::size_t o = 0; o < out_features(); ++o) {
      double s = bias_.value.values[o];
      for (std::size_t i = 0; i < in_features(); ++i) s += weight_.value.values[o * in_features() + i] * x.values[i];
      y.values[o] = s;
    }
    return y;
  }

  Tensor backward(const Tensor& x, const Tensor& g) override {
    Tensor gx(x.shape);
    for (std::size_t o = 0; o < out_features(); ++o) {
      bias_.grad[o] += g.values[o];
      for (std::size_t i = 0; i < in_features(); ++i) {
        weight_.grad[o * in_features() + i] += g.values[o] * x.values[i];
        gx.values[i] += weight_.value.values[o * in_features() + i] * g.values[o];
      }
    }
    return gx;
  }

  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  void initialize(Rng& rng) override {
    detail::he_uniform(weight_.value, static_cast<double>(in_features()), rng);
    std::fill(bias_.value.values.begin(), bias_.value.values.end(), 0.0);
  }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Linear>(*this); }

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  Parameter weight_;
  Parameter bias_;
};

/// Ordered layer stack. A Trace holds the inputs seen by each layer during a
/// recorded forward pass; backward replays it in reverse.
class Sequential {
 public:
  struct Trace {
    std::vector<Tensor> inputs;
    bool recorded = false;
  };

  Sequential() = default;
  Sequential(const Sequential& other) {
    for (const auto& l : other.layers_) layers_.push_back(l->clone());
  }
  Sequential& operator=(const Sequential& other) {
    if (this != &other) {
      Sequential tmp(other);
      layers_.swap(tmp.layers_);
    }
    return *this;
  }
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  template <typename L, typename... Args>
  L& add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }

  Tensor forward(const Tensor& x, Trace* trace = nullptr) const {
    if (trace) {
      trace->inputs.clear();
      trace->inputs.reserve(layers_.size());
    }
    Tensor cur = x;
    for (const auto& l : layers_) {
      Tensor next = l->forward(cur);
      if (trace) {
        trace->inputs.push_back(std::move(cur));
      }
      cur = std::move(next);
    }
    if (trace) trace->recorded = true;
    return cur;
  }

  Tensor backward(const Trace& trace, const Tensor& grad_out) {
    require(trace.recorded && trace.inputs.size() == layers_.size(), ErrorCode::GraphNotRecorded,
            "backward called without a recorded forward pass");
    Tensor g = grad_out;
    for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(trace.inputs[i], g);
    return g;
  }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out;
    for (auto& l : layers_) {
      for (Parameter* p : l->parameters()) out.push_back(p);
    }
    return out;
  }

  void initialize(Rng& rng) {
    for (auto& l : layers_) l->initialize(rng);
  }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace revq::nn
