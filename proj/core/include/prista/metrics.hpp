#pragma once

#include "prista/tensor.hpp"

namespace prista {

/// 10 * log10(peak^2 / MSE); +inf when the images are identical.
double psnr(const Tensor& x_hat, const Tensor& x_ref, double peak = 1.0);

/// Mean SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, dynamic range 1, over window-valid pixels. Inputs are [h, w]
/// (or [1, h, w]) with h, w >= 11.
double ssim(const Tensor& a, const Tensor& b);

}  // namespace prista
