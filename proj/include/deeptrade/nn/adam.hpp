#pragma once

#include <cstdint>

#include "deeptrade/nn/params.hpp"

namespace deeptrade::nn {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  ParamStore first_moment;
  ParamStore second_moment;

  static AdamState for_params(const ParamStore& params);
};

// Bias-corrected Adam: m <- b1 m + (1-b1) g, v <- b2 v + (1-b2) g^2,
// p <- p - lr * m_hat / (sqrt(v_hat) + eps). Increments state.step.
// Throws Error{ShapeMismatch} if grads or moments do not match params.
void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state, double lr);

}  // namespace deeptrade::nn
