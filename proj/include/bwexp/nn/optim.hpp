#pragma once

#include <vector>

#include "bwexp/nn/autodiff.hpp"

namespace bwexp::nn {

struct AdamConfig {
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double grad_clip_norm = 0.0;  // 0 disables global-norm clipping
};

class Adam {
 public:
  Adam(ParameterStore& params, AdamConfig config);

  /// Applies one update from the accumulated gradients; returns the gradient norm before clipping.
  double step();
  long steps_taken() const { return t_; }

 private:
  ParameterStore* params_;
  AdamConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long t_ = 0;
};

}  // namespace bwexp::nn
