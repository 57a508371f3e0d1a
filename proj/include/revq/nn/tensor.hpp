#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "revq/error.hpp"

namespace revq::nn {

/// Dense row-major tensor, shape (C, H, W) for maps or (N) for feature vectors.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s, double fill = 0.0) : shape(std::move(s)) {
    values.assign(element_count(shape), fill);
  }

  static std::size_t element_count(const std::vector<std::size_t>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
  }

  static Tensor map(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0) { return Tensor({c, h, w}, fill); }
  static Tensor vector(std::size_t n, double fill = 0.0) { return Tensor({n}, fill); }

  std::size_t size() const noexcept { return values.size(); }
  std::size_t rank() const noexcept { return shape.size(); }
  std::size_t channels() const { return shape.at(0); }
  std::size_t height() const { return shape.at(1); }
  std::size_t width() const { return shape.at(2); }
  std::size_t plane() const { return shape.at(1) * shape.at(2); }

  double& at(std::size_t c, std::size_t y, std::size_t x) { return values[(c * shape[1] + y) * shape[2] + x]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const { return values[(c * shape[1] + y) * shape[2] + x]; }
  double* channel(std::size_t c) { return values.data() + c * plane(); }
  const double* channel(std::size_t c) const { return values.data() + c * plane(); }

  bool all_finite() const {
    for (double v : values) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

inline std::string shape_string(const std::vector<std::size_t>& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + ")";
}

inline void expect_shape(const Tensor& t, const std::vector<std::size_t>& s, const char* where) {
  require(t.shape == s, ErrorCode::ShapeMismatch,
          std::string(where) + ": expected " + shape_string(s) + ", got " + shape_string(t.shape));
}

/// Learnable tensor with its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  std::vector<double> grad;

  Parameter() = default;
  Parameter(std::string n, std::vector<std::size_t> shape) : name(std::move(n)), value(std::move(shape)) {
    grad.assign(value.size(), 0.0);
  }

  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

}  // namespace revq::nn
