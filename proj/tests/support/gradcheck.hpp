#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "prista/ops.hpp"
#include "prista/tape.hpp"

namespace prista::test {

// Independent oracle: central finite differences of a scalar-valued graph,
// compared against reverse-mode gradients for every element of every input.
struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst;  // "input i element e: ad=..., fd=..."

  bool ok(double tol) const { return max_rel_err < tol; }
};

using ScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

inline double eval_scalar(const ScalarFn& fn, const std::vector<Tensor>& inputs) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const Tensor& t : inputs) vars.push_back(tape.leaf(t, /*requires_grad=*/false));
  return fn(tape, vars).value().scalar_value();
}

inline GradCheckResult gradcheck(const ScalarFn& fn, std::vector<Tensor> inputs, double h = 1e-6) {
  std::vector<Tensor> ad_grads;
  {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(inputs.size());
    for (const Tensor& t : inputs) vars.push_back(tape.leaf(t, /*requires_grad=*/true));
    Var root = fn(tape, vars);
    tape.backward(root);
    for (const Var& v : vars) {
      ad_grads.push_back(tape.has_grad(v) ? tape.grad(v) : Tensor::zeros(v.value().shape()));
    }
  }
  GradCheckResult result;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::int64_t e = 0; e < inputs[i].size(); ++e) {
      const double saved = inputs[i][e];
      inputs[i][e] = saved + h;
      const double fp = eval_scalar(fn, inputs);
      inputs[i][e] = saved - h;
      const double fm = eval_scalar(fn, inputs);
      inputs[i][e] = saved;
      const double fd = (fp - fm) / (2.0 * h);
      const double ad = ad_grads[i][e];
      const double rel = std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)});
      if (rel > result.max_rel_err) {
        result.max_rel_err = rel;
        result.worst = "input " + std::to_string(i) + " element " + std::to_string(e) +
                       ": ad=" + std::to_string(ad) + " fd=" + std::to_string(fd);
      }
    }
  }
  return result;
}

}  // namespace prista::test
