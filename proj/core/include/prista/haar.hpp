#pragma once

#include "prista/tensor.hpp"

namespace prista {

/// Full-depth orthonormal 2D Haar transform of an n-by-n image, n a power
/// of two. ihaar2(haar2(x)) == x and the transform preserves the 2-norm.
Tensor haar2(const Tensor& x);
Tensor ihaar2(const Tensor& coeffs);

}  // namespace prista
