#pragma once

#include <vector>

#include "lensr/autodiff.hpp"

namespace lensr::ad {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moment estimates for one tensor.
struct AdamState {
  Matrix m;
  Matrix v;
  long step = 0;
};

/// One bias-corrected Adam update of `value` given `grad`.
void adam_step(Matrix& value, const Matrix& grad, AdamState& state, const AdamConfig& config);

/// Adam over a fixed set of tensors. Tensors are borrowed and must outlive it.
class Adam {
 public:
  Adam(std::vector<Tensor*> params, AdamConfig config = {});

  void step();
  void zero_grad();
  const AdamConfig& config() const { return config_; }

 private:
  std::vector<Tensor*> params_;
  std::vector<AdamState> states_;
  AdamConfig config_;
};

}  // namespace lensr::ad
