#pragma once

#include <vector>

#include "prista/cdp.hpp"
#include "prista/tensor.hpp"

namespace prista {

struct SolverConfig {
  int iterations = 1000;
  double eta = 0.25;        // ISTA step size; default set per-solve to 1/J
  double lambda = 0.0;      // l1 weight, lambda = eta * gamma
  double beta = 0.9;        // HIO feedback
  double tolerance = 1e-9;  // early stop on relative iterate change

  void validate() const;
};

struct SolveReport {
  Tensor reconstruction;          // [n, n], values in [0, 1]
  std::vector<double> residuals;  // 0.5 * ||y - |Ax|||^2 after each iteration
  int iterations_used = 0;
  double wall_seconds = 0.0;
};

/// ISTA with the orthonormal Haar prox: r = x - eta * subgrad, then
/// x = ihaar2(soft(haar2(r), lambda)), clamped to [0, 1]. lambda = 0 skips
/// the (identity) transform pair so it is exactly the subgradient loop.
/// x0 defaults to all-ones. Throws on divergence (residual > 1e6).
SolveReport ista_solve(const Measurement& meas, const MaskSet& masks, const SolverConfig& cfg,
                       const Tensor* x0 = nullptr);

/// HIO adapted to CDP: magnitude replacement per mask channel, averaged via
/// A^H / J, Fienup feedback with beta on pixels violating the [0, 1]
/// constraint.
SolveReport hio_solve(const Measurement& meas, const MaskSet& masks, const SolverConfig& cfg,
                      const Tensor* x0 = nullptr);

/// s * x_hat with s in {+1, -1} minimizing ||s * x_hat - x_ref||; ties pick +1.
Tensor align_global_sign(const Tensor& x_hat, const Tensor& x_ref);

}  // namespace prista
