#pragma once

#include <cmath>
#include <numbers>

#include "prista/cdp.hpp"
#include "prista/rng.hpp"
#include "prista/tensor.hpp"

namespace prista::test {

// O(N^2) unitary 2D DFT, written independently of the radix-2 path.
inline void naive_dft2(const Tensor& re_in, const Tensor& im_in, Tensor& re_out, Tensor& im_out,
                       bool inverse) {
  const std::int64_t h = re_in.extent(0), w = re_in.extent(1);
  re_out = Tensor({h, w});
  im_out = Tensor({h, w});
  const double sign = inverse ? 1.0 : -1.0;
  const double scale = 1.0 / std::sqrt(static_cast<double>(h * w));
  for (std::int64_t u = 0; u < h; ++u) {
    for (std::int64_t v = 0; v < w; ++v) {
      double ar = 0.0, ai = 0.0;
      for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
          const double ang = sign * 2.0 * std::numbers::pi *
                             (static_cast<double>(u * y) / static_cast<double>(h) +
                              static_cast<double>(v * x) / static_cast<double>(w));
          const double cr = std::cos(ang), ci = std::sin(ang);
          const double xr = re_in.at(y, x), xi = im_in.at(y, x);
          ar += xr * cr - xi * ci;
          ai += xr * ci + xi * cr;
        }
      }
      re_out.at(u, v) = ar * scale;
      im_out.at(u, v) = ai * scale;
    }
  }
}

// Independent evaluation of Re A^H (Ax - y * Ax / max(|Ax|, eps)) built on
// the naive DFT; the oracle for the production subgradient.
inline Tensor naive_amplitude_subgradient(const Tensor& x, const Measurement& meas,
                                          const MaskSet& masks) {
  const std::int64_t n = masks.n, J = masks.J;
  Tensor g({n, n});
  for (std::int64_t j = 0; j < J; ++j) {
    Tensor mre({n, n}), mim({n, n});
    for (std::int64_t i = 0; i < n * n; ++i) {
      mre[i] = x[i] * masks.cos_p[j * n * n + i];
      mim[i] = x[i] * masks.sin_p[j * n * n + i];
    }
    Tensor fre, fim;
    naive_dft2(mre, mim, fre, fim, false);
    for (std::int64_t i = 0; i < n * n; ++i) {
      const double mag = std::hypot(fre[i], fim[i]);
      const double s = meas.y[j * n * n + i] / std::max(mag, kDivGuard);
      fre[i] -= s * fre[i];
      fim[i] -= s * fim[i];
    }
    Tensor bre, bim;
    naive_dft2(fre, fim, bre, bim, true);
    for (std::int64_t i = 0; i < n * n; ++i) {
      // real part of conj(D_j) * z
      g[i] += bre[i] * masks.cos_p[j * n * n + i] + bim[i] * masks.sin_p[j * n * n + i];
    }
  }
  return g;
}

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

}  // namespace prista::test
