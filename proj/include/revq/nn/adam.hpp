#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "revq/error.hpp"
#include "revq/nn/tensor.hpp"

namespace revq::nn {

struct AdamParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Moment buffers are bound to the parameter list
/// given at construction; the list order must stay fixed.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamParams hp = {}) : params_(std::move(params)), hp_(hp) {
    require(hp_.learning_rate > 0.0 && hp_.beta1 >= 0.0 && hp_.beta1 < 1.0 && hp_.beta2 >= 0.0 && hp_.beta2 < 1.0 &&
                hp_.epsilon > 0.0,
            ErrorCode::InvalidArgument, "invalid Adam hyperparameters");
    for (const Parameter* p : params_) {
      m_.emplace_back(p->value.size(), 0.0);
      v_.emplace_back(p->value.size(), 0.0);
    }
  }

  std::uint64_t steps() const { return t_; }

  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(hp_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(hp_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      Parameter& p = *params_[k];
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < p.grad.size(); ++i) {
        const double g = p.grad[i];
        m[i] = hp_.beta1 * m[i] + (1.0 - hp_.beta1) * g;
        v[i] = hp_.beta2 * v[i] + (1.0 - hp_.beta2) * g * g;
        p.value.values[i] -= hp_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + hp_.epsilon);
      }
    }
  }

  void zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
  }

 private:
  std::vector<Parameter*> params_;
  AdamParams hp_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::uint64_t t_ = 0;
};

}  // namespace revq::nn
