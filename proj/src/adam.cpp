#include "lensr/adam.hpp"

#include <cmath>

namespace lensr::ad {

void adam_step(Matrix& value, const Matrix& grad, AdamState& state, const AdamConfig& c) {
  require_same_shape(value, grad, "adam_step");
  if (state.m.empty() && state.v.empty()) {
    state.m = Matrix(value.rows(), value.cols());
    state.v = Matrix(value.rows(), value.cols());
  }
  require_same_shape(value, state.m, "adam_step (state)");
  ++state.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  const double step_size = c.lr / bc1;
  const double inv_sqrt_bc2 = 1.0 / std::sqrt(bc2);
  auto x = value.data();
  auto g = grad.data();
  auto m = state.m.data();
  auto v = state.v.data();
  for (std::size_t k = 0; k < x.size(); ++k) {
    m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
    v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
    x[k] -= step_size * m[k] / (std::sqrt(v[k]) * inv_sqrt_bc2 + c.eps);
  }
}

Adam::Adam(std::vector<Tensor*> params, AdamConfig config)
    : params_(std::move(params)), states_(params_.size()), config_(config) {}

void Adam::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& t = *params_[i];
    if (!t.requires_grad) continue;
    adam_step(t.value, t.grad, states_[i], config_);
  }
}

void Adam::zero_grad() {
  for (Tensor* t : params_) t->zero_grad();
}

}  // namespace lensr::ad
