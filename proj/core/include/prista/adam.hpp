#pragma once

#include <cstdint>
#include <vector>

#include "prista/network.hpp"

namespace prista {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  std::vector<Tensor> m, v;  // first/second moments, mirroring the registry
  std::int64_t step = 0;
};

AdamState init_adam(const ParamSet& params);

/// Bias-corrected Adam update applied in registry order.
void adam_step(ParamSet& params, const std::vector<Tensor>& grads, AdamState& state, double lr);

}  // namespace prista
