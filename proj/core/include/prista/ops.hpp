#pragma once

#include <utility>

#include "prista/tape.hpp"

namespace prista {

// ---- elementwise (same shape) ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);

// ---- unary elementwise ----
Var neg(const Var& v);
Var relu(const Var& v);
Var sigmoid(const Var& v);
Var abs(const Var& v);
Var log(const Var& v);
Var sqrt(const Var& v);
/// max(v, c); gradient 1 strictly above c, else 0.
Var maximum_scalar(const Var& v, double c);

/// sign(v) * max(|v| - theta, 0); theta is a nonnegative scalar Var.
Var soft_threshold(const Var& v, const Var& theta);

/// Elementwise sqrt(re^2 + im^2) with an eps-guarded backward.
Var complex_magnitude(const Var& re, const Var& im);

// ---- scalar broadcast ----
Var mul_scalar(const Var& v, const Var& s);

// ---- reductions ----
Var sum(const Var& v);
Var mean(const Var& v);

// ---- channel layout ops on [C, H, W] ----
Var global_avg_pool(const Var& v);                    // -> [C]
Var global_max_pool(const Var& v);                    // -> [C]; ties to lowest index
Var channel_mean(const Var& v);                       // -> [1, H, W]
Var channel_max(const Var& v);                        // -> [1, H, W]; ties to lowest channel
Var concat_channels(const Var& a, const Var& b);      // -> [Ca + Cb, H, W]
Var slice_channels(const Var& v, std::int64_t c0, std::int64_t c1);
Var repeat_channels(const Var& v, std::int64_t times);  // [1, H, W] -> [times, H, W]
Var sum_channels(const Var& v);                         // [C, H, W] -> [1, H, W]
Var mul_channels(const Var& f, const Var& s);           // f[C,H,W] * s[C]
Var mul_spatial(const Var& f, const Var& m);            // f[C,H,W] * m[1,H,W]

// ---- linear layers ----
Var dense(const Var& x, const Var& w, const Var& b);  // x[In], w[Out,In], b[Out]

/// Same-padded cross-correlation: input [Cin,H,W], kernel [Cout,Cin,kh,kw]
/// (kh, kw odd), bias [Cout] -> [Cout,H,W].
Var conv2d(const Var& input, const Var& kernel, const Var& bias);

// Raw kernels shared by the tape op and its backward.
Tensor conv2d_forward(const Tensor& in, const Tensor& k, const Tensor& b);
Tensor conv2d_backward_input(const Tensor& gout, const Tensor& k, const Shape& in_shape);
Tensor conv2d_backward_kernel(const Tensor& gout, const Tensor& in, const Shape& k_shape);
Tensor conv2d_backward_bias(const Tensor& gout);

/// Unitary 2D DFT over the trailing two dims (power-of-two extents),
/// returned as a (real, imaginary) pair. Backward of the forward transform
/// applies the inverse transform to the cotangents and vice versa.
std::pair<Var, Var> fft2c(const Var& re, const Var& im);
std::pair<Var, Var> ifft2c(const Var& re, const Var& im);

}  // namespace prista
