#include "prista/solvers.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "prista/fft.hpp"
#include "prista/haar.hpp"

namespace prista {

namespace {

constexpr double kDivergenceCap = 1e6;

Tensor initial_iterate(const MaskSet& masks, const Tensor* x0) {
  if (!x0) return Tensor::ones({masks.n, masks.n});
  if (x0->rank() != 2 || x0->extent(0) != masks.n || x0->extent(1) != masks.n) {
    throw std::invalid_argument("solver: x0 shape does not match mask side");
  }
  return *x0;
}

void clamp01(Tensor& x) {
  for (std::int64_t i = 0; i < x.size(); ++i) x[i] = std::min(1.0, std::max(0.0, x[i]));
}

double relative_change(const Tensor& next, const Tensor& prev) {
  double dn = 0.0, pn = 0.0;
  for (std::int64_t i = 0; i < next.size(); ++i) {
    const double d = next[i] - prev[i];
    dn += d * d;
    pn += prev[i] * prev[i];
  }
  return std::sqrt(dn) / std::max(std::sqrt(pn), 1e-30);
}

void check_divergence(double residual, int iter, const char* solver) {
  if (!(residual <= kDivergenceCap)) {
    throw std::runtime_error(std::string(solver) + ": diverged at iteration " +
                             std::to_string(iter) + " (residual " + std::to_string(residual) +
                             ")");
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("SolverConfig: iterations must be >= 1");
  if (!(beta > 0.0) || beta > 1.0) throw std::invalid_argument("SolverConfig: beta must be in (0, 1]");
  if (!(eta > 0.0)) throw std::invalid_argument("SolverConfig: eta must be > 0");
  if (lambda < 0.0) throw std::invalid_argument("SolverConfig: lambda must be >= 0");
}

SolveReport ista_solve(const Measurement& meas, const MaskSet& masks, const SolverConfig& cfg,
                       const Tensor* x0) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  Tensor x = initial_iterate(masks, x0);
  SolveReport report;
  for (int it = 0; it < cfg.iterations; ++it) {
    Tensor prev = x;
    Tensor r = sgd_step(x, cfg.eta, meas, masks);
    if (cfg.lambda > 0.0) {
      Tensor coeffs = haar2(r);
      const double th = cfg.lambda;
      for (std::int64_t i = 0; i < coeffs.size(); ++i) {
        const double v = coeffs[i];
        const double m = std::abs(v) - th;
        coeffs[i] = m > 0.0 ? (v > 0.0 ? m : -m) : 0.0;
      }
      x = ihaar2(coeffs);
    } else {
      x = std::move(r);
    }
    clamp01(x);
    const double res = amplitude_residual(x, meas, masks);
    report.residuals.push_back(res);
    ++report.iterations_used;
    check_divergence(res, it, "ista_solve");
    if (relative_change(x, prev) < cfg.tolerance) break;
  }
  report.reconstruction = std::move(x);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

SolveReport hio_solve(const Measurement& meas, const MaskSet& masks, const SolverConfig& cfg,
                      const Tensor* x0) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::int64_t J = masks.J;
  Tensor x = initial_iterate(masks, x0);
  SolveReport report;
  for (int it = 0; it < cfg.iterations; ++it) {
    ComplexField u = cdp_forward(x, masks);
    // magnitude replacement in every mask channel
    for (std::int64_t i = 0; i < u.re.size(); ++i) {
      const double mag = std::sqrt(u.re[i] * u.re[i] + u.im[i] * u.im[i]);
      const double factor = meas.y[i] / std::max(mag, kDivGuard);
      u.re[i] *= factor;
      u.im[i] *= factor;
    }
    ComplexField back = cdp_adjoint(u, masks);
    Tensor candidate({masks.n, masks.n});
    for (std::int64_t i = 0; i < candidate.size(); ++i) candidate[i] = back.re[i] / static_cast<double>(J);
    Tensor next({masks.n, masks.n});
    for (std::int64_t i = 0; i < next.size(); ++i) {
      const double c = candidate[i];
      next[i] = (c >= 0.0 && c <= 1.0) ? c : x[i] - cfg.beta * c;
    }
    const double change = relative_change(next, x);
    x = std::move(next);
    const double res = amplitude_residual(x, meas, masks);
    report.residuals.push_back(res);
    ++report.iterations_used;
    check_divergence(res, it, "hio_solve");
    if (change < cfg.tolerance) break;
  }
  clamp01(x);
  report.reconstruction = std::move(x);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

Tensor align_global_sign(const Tensor& x_hat, const Tensor& x_ref) {
  if (!x_hat.same_shape(x_ref)) throw std::invalid_argument("align_global_sign: shape mismatch");
  double dot = 0.0;
  for (std::int64_t i = 0; i < x_hat.size(); ++i) dot += x_hat[i] * x_ref[i];
  if (dot >= 0.0) return x_hat;
  Tensor flipped(x_hat.shape());
  for (std::int64_t i = 0; i < x_hat.size(); ++i) flipped[i] = -x_hat[i];
  return flipped;
}

}  // namespace prista
