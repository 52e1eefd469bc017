#include "prista/cdp.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "prista/checkpoint.hpp"
#include "prista/fft.hpp"
#include "prista/ops.hpp"
#include "prista/rng.hpp"

namespace prista {

namespace {

void check_image(const Tensor& x, const MaskSet& masks, const char* op) {
  if (x.rank() != 2 || x.extent(0) != masks.n || x.extent(1) != masks.n) {
    throw std::invalid_argument(std::string(op) + ": image shape " + shape_string(x.shape()) +
                                " does not match mask side " + std::to_string(masks.n));
  }
}

}  // namespace

MaskSet MaskSet::from_phases(Tensor phases, std::uint64_t seed) {
  if (phases.rank() != 3 || phases.extent(1) != phases.extent(2)) {
    throw std::invalid_argument("MaskSet: phases must be [J, n, n]");
  }
  MaskSet m;
  m.J = phases.extent(0);
  m.n = phases.extent(1);
  m.seed = seed;
  m.cos_p = Tensor(phases.shape());
  m.sin_p = Tensor(phases.shape());
  for (std::int64_t i = 0; i < phases.size(); ++i) {
    m.cos_p[i] = std::cos(phases[i]);
    m.sin_p[i] = std::sin(phases[i]);
  }
  m.phases = std::move(phases);
  return m;
}

MaskSet generate_masks(std::int64_t n, std::int64_t J, std::uint64_t seed) {
  if (!is_pow2(n)) throw std::invalid_argument("generate_masks: n must be a power of two");
  if (J < 1) throw std::invalid_argument("generate_masks: J must be >= 1");
  Tensor phases({J, n, n});
  Rng rng(seed);
  for (std::int64_t i = 0; i < phases.size(); ++i) {
    phases[i] = 2.0 * std::numbers::pi * rng.uniform();
  }
  return MaskSet::from_phases(std::move(phases), seed);
}

ComplexField cdp_forward(const Tensor& x, const MaskSet& masks) {
  check_image(x, masks, "cdp_forward");
  const std::int64_t n = masks.n, J = masks.J, nn = n * n;
  ComplexField f{Tensor({J, n, n}), Tensor({J, n, n})};
  for (std::int64_t j = 0; j < J; ++j) {
    const double* c = masks.cos_p.data() + j * nn;
    const double* s = masks.sin_p.data() + j * nn;
    double* re = f.re.data() + j * nn;
    double* im = f.im.data() + j * nn;
    for (std::int64_t i = 0; i < nn; ++i) {
      re[i] = x[i] * c[i];
      im[i] = x[i] * s[i];
    }
  }
  fft2_unitary(f.re.data(), f.im.data(), J, n, n, false);
  return f;
}

ComplexField cdp_adjoint(const ComplexField& z, const MaskSet& masks) {
  const std::int64_t n = masks.n, J = masks.J, nn = n * n;
  if (!z.re.same_shape(masks.phases) || !z.im.same_shape(masks.phases)) {
    throw std::invalid_argument("cdp_adjoint: field shape mismatch");
  }
  Tensor tre = z.re, tim = z.im;
  fft2_unitary(tre.data(), tim.data(), J, n, n, true);
  ComplexField out{Tensor({n, n}), Tensor({n, n})};
  for (std::int64_t j = 0; j < J; ++j) {
    const double* c = masks.cos_p.data() + j * nn;
    const double* s = masks.sin_p.data() + j * nn;
    const double* re = tre.data() + j * nn;
    const double* im = tim.data() + j * nn;
    // conj(D_j) * z: (cos - i sin)(re + i im)
    for (std::int64_t i = 0; i < nn; ++i) {
      out.re[i] += re[i] * c[i] + im[i] * s[i];
      out.im[i] += im[i] * c[i] - re[i] * s[i];
    }
  }
  return out;
}

Measurement measure(const Tensor& x, const MaskSet& masks, double alpha,
                    std::uint64_t noise_seed) {
  check_image(x, masks, "measure");
  if (alpha < 0.0) throw std::invalid_argument("measure: alpha must be >= 0");
  ComplexField f = cdp_forward(x, masks);
  Measurement m;
  m.alpha = alpha;
  m.mask_seed = masks.seed;
  m.noise_seed = noise_seed;
  m.n = masks.n;
  m.J = masks.J;
  m.y = Tensor(f.re.shape());
  if (alpha == 0.0) {
    for (std::int64_t i = 0; i < m.y.size(); ++i) {
      m.y[i] = std::sqrt(f.re[i] * f.re[i] + f.im[i] * f.im[i]);
    }
  } else {
    Rng rng(noise_seed);
    const double scale = alpha / 255.0;
    for (std::int64_t i = 0; i < m.y.size(); ++i) {
      const double intensity = f.re[i] * f.re[i] + f.im[i] * f.im[i];
      const double noisy = intensity + scale * intensity * rng.normal();
      m.y[i] = std::sqrt(std::max(noisy, 0.0));
    }
  }
  return m;
}

namespace {

// Shared core of the subgradient: given the forward field of x, rescale by
// (1 - y / max(|u|, eps)) and return Re A^H of it. Written to match the tape
// path operation for operation.
Tensor subgradient_from_field(ComplexField f, const Measurement& meas, const MaskSet& masks) {
  const std::int64_t total = f.re.size();
  for (std::int64_t i = 0; i < total; ++i) {
    const double mag = std::sqrt(f.re[i] * f.re[i] + f.im[i] * f.im[i]);
    const double guarded = std::max(mag, kDivGuard);
    const double scale = meas.y[i] / guarded;
    const double ts = 1.0 - scale;
    f.re[i] = f.re[i] * ts;
    f.im[i] = f.im[i] * ts;
  }
  const std::int64_t n = masks.n, J = masks.J, nn = n * n;
  fft2_unitary(f.re.data(), f.im.data(), J, n, n, true);
  Tensor g({n, n});
  for (std::int64_t j = 0; j < J; ++j) {
    const double* c = masks.cos_p.data() + j * nn;
    const double* s = masks.sin_p.data() + j * nn;
    const double* re = f.re.data() + j * nn;
    const double* im = f.im.data() + j * nn;
    for (std::int64_t i = 0; i < nn; ++i) g[i] += re[i] * c[i] + im[i] * s[i];
  }
  return g;
}

}  // namespace

Tensor amplitude_subgradient(const Tensor& x, const Measurement& meas, const MaskSet& masks) {
  check_image(x, masks, "amplitude_subgradient");
  if (!meas.y.same_shape(masks.phases)) {
    throw std::invalid_argument("amplitude_subgradient: measurement/mask shape mismatch");
  }
  return subgradient_from_field(cdp_forward(x, masks), meas, masks);
}

Tensor sgd_step(const Tensor& x, double eta, const Measurement& meas, const MaskSet& masks) {
  Tensor g = amplitude_subgradient(x, meas, masks);
  Tensor out({masks.n, masks.n});
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = x[i] - g[i] * eta;
  return out;
}

double amplitude_residual(const Tensor& x, const Measurement& meas, const MaskSet& masks) {
  ComplexField f = cdp_forward(x, masks);
  double acc = 0.0;
  for (std::int64_t i = 0; i < f.re.size(); ++i) {
    const double mag = std::sqrt(f.re[i] * f.re[i] + f.im[i] * f.im[i]);
    const double d = meas.y[i] - mag;
    acc += d * d;
  }
  return 0.5 * acc;
}

Var sgd_step(const Var& x, const Var& eta, const Measurement& meas, const MaskSet& masks) {
  Tape& t = *x.tape();
  const std::int64_t n = masks.n, J = masks.J;
  if (x.value().rank() != 3 || x.value().extent(0) != 1 || x.value().extent(1) != n ||
      x.value().extent(2) != n) {
    throw std::invalid_argument("sgd_step: expected x of shape [1, n, n]");
  }
  Var cos_c = t.constant(masks.cos_p);
  Var sin_c = t.constant(masks.sin_p);
  Var y_c = t.constant(meas.y);
  Var ones_c = t.constant(Tensor::ones({J, n, n}));

  Var xr = repeat_channels(x, J);
  Var re0 = mul(xr, cos_c);
  Var im0 = mul(xr, sin_c);
  auto [re, im] = fft2c(re0, im0);
  Var mag = complex_magnitude(re, im);
  Var guarded = maximum_scalar(mag, kDivGuard);
  Var scale = div(y_c, guarded);
  Var ts = sub(ones_c, scale);
  Var re2 = mul(re, ts);
  Var im2 = mul(im, ts);
  auto [are, aim] = ifft2c(re2, im2);
  Var g = sum_channels(add(mul(are, cos_c), mul(aim, sin_c)));
  return sub(x, mul_scalar(g, eta));
}

void save_measurement(const std::string& path, const Measurement& meas, const MaskSet& masks,
                      const Tensor* x_true) {
  NamedTensors tensors;
  tensors.add("y", meas.y);
  tensors.add("phases", masks.phases);
  if (x_true) tensors.add("x_true", *x_true);
  nlohmann::json meta{
      {"kind", "measurement"},  {"J", meas.J},
      {"n", meas.n},            {"alpha", meas.alpha},
      {"mask_seed", meas.mask_seed}, {"noise_seed", meas.noise_seed},
      {"prng", Rng::kAlgorithm},
  };
  write_container(path, tensors, meta.dump());
}

MeasurementFile load_measurement(const std::string& path) {
  Container c = read_container(path);
  nlohmann::json meta = nlohmann::json::parse(c.meta_json);
  if (meta.value("kind", "") != "measurement") {
    throw std::runtime_error("load_measurement: not a measurement container: " + path);
  }
  MeasurementFile out;
  out.masks = MaskSet::from_phases(c.tensors.get("phases"), meta.at("mask_seed").get<std::uint64_t>());
  out.meas.y = c.tensors.get("y");
  out.meas.alpha = meta.at("alpha").get<double>();
  out.meas.mask_seed = meta.at("mask_seed").get<std::uint64_t>();
  out.meas.noise_seed = meta.at("noise_seed").get<std::uint64_t>();
  out.meas.n = meta.at("n").get<std::int64_t>();
  out.meas.J = meta.at("J").get<std::int64_t>();
  if (!out.meas.y.same_shape(out.masks.phases)) {
    throw std::runtime_error("load_measurement: y/phases shape mismatch in " + path);
  }
  if (const Tensor* xt = c.tensors.find("x_true")) out.x_true = *xt;
  return out;
}

}  // namespace prista
