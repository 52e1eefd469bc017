#include "prista/haar.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "prista/fft.hpp"

namespace prista {

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

void check_square_pow2(const Tensor& x, const char* op) {
  if (x.rank() != 2 || x.extent(0) != x.extent(1) || !is_pow2(x.extent(0))) {
    throw std::invalid_argument(std::string(op) + ": expected square power-of-two image, got " +
                                shape_string(x.shape()));
  }
}

// One analysis step of length m along a strided vector.
void step_fwd(double* a, std::int64_t m, std::int64_t stride, std::vector<double>& tmp) {
  const std::int64_t half = m / 2;
  for (std::int64_t k = 0; k < half; ++k) {
    const double u = a[2 * k * stride];
    const double v = a[(2 * k + 1) * stride];
    tmp[static_cast<std::size_t>(k)] = (u + v) * kInvSqrt2;
    tmp[static_cast<std::size_t>(half + k)] = (u - v) * kInvSqrt2;
  }
  for (std::int64_t k = 0; k < m; ++k) a[k * stride] = tmp[static_cast<std::size_t>(k)];
}

void step_inv(double* a, std::int64_t m, std::int64_t stride, std::vector<double>& tmp) {
  const std::int64_t half = m / 2;
  for (std::int64_t k = 0; k < half; ++k) {
    const double s = a[k * stride];
    const double d = a[(half + k) * stride];
    tmp[static_cast<std::size_t>(2 * k)] = (s + d) * kInvSqrt2;
    tmp[static_cast<std::size_t>(2 * k + 1)] = (s - d) * kInvSqrt2;
  }
  for (std::int64_t k = 0; k < m; ++k) a[k * stride] = tmp[static_cast<std::size_t>(k)];
}

}  // namespace

Tensor haar2(const Tensor& x) {
  check_square_pow2(x, "haar2");
  Tensor out = x;
  const std::int64_t n = x.extent(0);
  std::vector<double> tmp(static_cast<std::size_t>(n));
  for (std::int64_t m = n; m >= 2; m /= 2) {
    for (std::int64_t r = 0; r < m; ++r) step_fwd(out.data() + r * n, m, 1, tmp);
    for (std::int64_t c = 0; c < m; ++c) step_fwd(out.data() + c, m, n, tmp);
  }
  return out;
}

Tensor ihaar2(const Tensor& coeffs) {
  check_square_pow2(coeffs, "ihaar2");
  Tensor out = coeffs;
  const std::int64_t n = coeffs.extent(0);
  std::vector<double> tmp(static_cast<std::size_t>(n));
  for (std::int64_t m = 2; m <= n; m *= 2) {
    for (std::int64_t c = 0; c < m; ++c) step_inv(out.data() + c, m, n, tmp);
    for (std::int64_t r = 0; r < m; ++r) step_inv(out.data() + r * n, m, 1, tmp);
  }
  return out;
}

}  // namespace prista
