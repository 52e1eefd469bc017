#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "prista/tape.hpp"
#include "prista/tensor.hpp"

namespace prista {

/// Guard for the y * Ax / |Ax| division where the field magnitude vanishes.
inline constexpr double kDivGuard = 1e-12;

/// J unit-modulus diagonal illumination masks; element (j, y, x) is
/// exp(i * phases[j, y, x]) with phases i.i.d. uniform on [0, 2*pi).
struct MaskSet {
  std::int64_t J = 0;
  std::int64_t n = 0;
  std::uint64_t seed = 0;
  Tensor phases;  // [J, n, n]
  Tensor cos_p, sin_p;

  static MaskSet from_phases(Tensor phases, std::uint64_t seed);
};

MaskSet generate_masks(std::int64_t n, std::int64_t J, std::uint64_t seed);

/// Nonnegative amplitude data y = sqrt(max(|Ax|^2 + omega, 0)) with
/// omega ~ N(0, ((alpha/255) * |Ax|^2)^2) per element; alpha = 0 gives
/// y = |Ax| exactly.
struct Measurement {
  Tensor y;  // [J, n, n]
  double alpha = 0.0;
  std::uint64_t mask_seed = 0;
  std::uint64_t noise_seed = 0;
  std::int64_t n = 0;
  std::int64_t J = 0;
};

struct ComplexField {
  Tensor re, im;
};

/// A x: slice j is the unitary FFT2 of the mask-modulated image.
ComplexField cdp_forward(const Tensor& x, const MaskSet& masks);

/// A^H z: sum over j of conj(D_j) * IFFT2(z_j), unitary convention.
ComplexField cdp_adjoint(const ComplexField& z, const MaskSet& masks);

Measurement measure(const Tensor& x, const MaskSet& masks, double alpha,
                    std::uint64_t noise_seed);

/// Re A^H (Ax - y * Ax / max(|Ax|, eps)), a subgradient of the amplitude
/// loss 0.5 * ||y - |Ax|||^2.
Tensor amplitude_subgradient(const Tensor& x, const Measurement& meas, const MaskSet& masks);

Tensor sgd_step(const Tensor& x, double eta, const Measurement& meas, const MaskSet& masks);

/// 0.5 * ||y - |Ax|||^2.
double amplitude_residual(const Tensor& x, const Measurement& meas, const MaskSet& masks);

/// Tape version of sgd_step for x[1,n,n]; differentiable in x and eta and
/// arithmetic-identical to the plain version.
Var sgd_step(const Var& x, const Var& eta, const Measurement& meas, const MaskSet& masks);

// Measurement container I/O (tensors "y", "phases", optional "x_true").
void save_measurement(const std::string& path, const Measurement& meas, const MaskSet& masks,
                      const Tensor* x_true = nullptr);

struct MeasurementFile {
  Measurement meas;
  MaskSet masks;
  std::optional<Tensor> x_true;
};

MeasurementFile load_measurement(const std::string& path);

}  // namespace prista
