#include "prista/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace prista {

bool is_pow2(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

namespace {

struct Plan1d {
  std::int64_t n = 0;
  std::vector<double> twr, twi;     // exp(-+2*pi*i*j/n), j < n/2
  std::vector<std::int32_t> bitrev;
};

Plan1d make_plan(std::int64_t n, bool inverse) {
  Plan1d p;
  p.n = n;
  p.twr.resize(static_cast<std::size_t>(n / 2));
  p.twi.resize(static_cast<std::size_t>(n / 2));
  const double sign = inverse ? 1.0 : -1.0;
  for (std::int64_t j = 0; j < n / 2; ++j) {
    double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
    p.twr[static_cast<std::size_t>(j)] = std::cos(ang);
    p.twi[static_cast<std::size_t>(j)] = std::sin(ang);
  }
  p.bitrev.assign(static_cast<std::size_t>(n), 0);
  for (std::int64_t i = 1, j = 0; i < n; ++i) {
    std::int64_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    p.bitrev[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(j);
  }
  return p;
}

void fft1d(double* re, double* im, std::int64_t stride, const Plan1d& p) {
  const std::int64_t n = p.n;
  for (std::int64_t i = 0; i < n; ++i) {
    std::int64_t j = p.bitrev[static_cast<std::size_t>(i)];
    if (j > i) {
      std::swap(re[i * stride], re[j * stride]);
      std::swap(im[i * stride], im[j * stride]);
    }
  }
  for (std::int64_t len = 2; len <= n; len <<= 1) {
    const std::int64_t half = len >> 1;
    const std::int64_t step = n / len;
    for (std::int64_t i = 0; i < n; i += len) {
      for (std::int64_t j = 0; j < half; ++j) {
        const double wr = p.twr[static_cast<std::size_t>(j * step)];
        const double wi = p.twi[static_cast<std::size_t>(j * step)];
        const std::int64_t a = (i + j) * stride;
        const std::int64_t b = (i + j + half) * stride;
        const double vr = re[b] * wr - im[b] * wi;
        const double vi = re[b] * wi + im[b] * wr;
        const double ur = re[a];
        const double ui = im[a];
        re[a] = ur + vr;
        im[a] = ui + vi;
        re[b] = ur - vr;
        im[b] = ui - vi;
      }
    }
  }
}

}  // namespace

void fft2_unitary(double* re, double* im, std::int64_t batch, std::int64_t h, std::int64_t w,
                  bool inverse) {
  if (!is_pow2(h) || !is_pow2(w)) {
    throw std::invalid_argument("fft2_unitary: extents must be powers of two, got " +
                                std::to_string(h) + "x" + std::to_string(w));
  }
  const Plan1d row_plan = make_plan(w, inverse);
  const Plan1d col_plan = (h == w) ? row_plan : make_plan(h, inverse);
  const std::int64_t hw = h * w;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hw));
  for (std::int64_t b = 0; b < batch; ++b) {
    double* pre = re + b * hw;
    double* pim = im + b * hw;
    for (std::int64_t y = 0; y < h; ++y) fft1d(pre + y * w, pim + y * w, 1, row_plan);
    for (std::int64_t x = 0; x < w; ++x) fft1d(pre + x, pim + x, w, col_plan);
    for (std::int64_t i = 0; i < hw; ++i) {
      pre[i] *= scale;
      pim[i] *= scale;
    }
  }
}

void fft2_unitary(Tensor& re, Tensor& im, bool inverse) {
  if (!re.same_shape(im)) throw std::invalid_argument("fft2_unitary: re/im shape mismatch");
  if (re.rank() < 2) throw std::invalid_argument("fft2_unitary: rank must be >= 2");
  const std::int64_t w = re.extent(re.rank() - 1);
  const std::int64_t h = re.extent(re.rank() - 2);
  const std::int64_t batch = re.size() / (h * w);
  fft2_unitary(re.data(), im.data(), batch, h, w, inverse);
}

}  // namespace prista
