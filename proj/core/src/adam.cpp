#include "prista/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace prista {

AdamState init_adam(const ParamSet& params) {
  AdamState s;
  s.m.reserve(params.values.size());
  s.v.reserve(params.values.size());
  for (const Tensor& p : params.values) {
    s.m.push_back(Tensor::zeros(p.shape()));
    s.v.push_back(Tensor::zeros(p.shape()));
  }
  return s;
}

void adam_step(ParamSet& params, const std::vector<Tensor>& grads, AdamState& state, double lr) {
  if (grads.size() != params.values.size() || state.m.size() != params.values.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
  }
  ++state.step;
  const double b1 = state.cfg.beta1, b2 = state.cfg.beta2, eps = state.cfg.eps;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.values.size(); ++p) {
    Tensor& w = params.values[p];
    const Tensor& g = grads[p];
    if (!g.same_shape(w)) throw std::invalid_argument("adam_step: gradient shape mismatch at " + params.names[p]);
    Tensor& m = state.m[p];
    Tensor& v = state.v[p];
    for (std::int64_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace prista
