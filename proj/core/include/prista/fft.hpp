#pragma once

#include <cstdint>

#include "prista/tensor.hpp"

namespace prista {

bool is_pow2(std::int64_t n);

/// In-place unitary 2D FFT (scale 1/sqrt(h*w) in both directions) over the
/// trailing two dims of `batch` stacked h-by-w planes. Radix-2, so h and w
/// must be powers of two.
void fft2_unitary(double* re, double* im, std::int64_t batch, std::int64_t h, std::int64_t w,
                  bool inverse);

/// Tensor convenience: re/im must share a shape of rank >= 2; leading dims
/// are treated as batch.
void fft2_unitary(Tensor& re, Tensor& im, bool inverse);

}  // namespace prista
