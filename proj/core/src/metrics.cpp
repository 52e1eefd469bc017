#include "prista/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace prista {

double psnr(const Tensor& x_hat, const Tensor& x_ref, double peak) {
  if (!x_hat.same_shape(x_ref)) throw std::invalid_argument("psnr: shape mismatch");
  double mse = 0.0;
  for (std::int64_t i = 0; i < x_hat.size(); ++i) {
    const double d = x_hat[i] - x_ref[i];
    mse += d * d;
  }
  mse /= static_cast<double>(x_hat.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // (K1 * L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;

struct View2d {
  const double* data;
  std::int64_t h, w;
};

View2d as_2d(const Tensor& t, const char* op) {
  if (t.rank() == 2) return {t.data(), t.extent(0), t.extent(1)};
  if (t.rank() == 3 && t.extent(0) == 1) return {t.data(), t.extent(1), t.extent(2)};
  throw std::invalid_argument(std::string(op) + ": expected [h,w] or [1,h,w], got " +
                              shape_string(t.shape()));
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b) {
  const View2d va = as_2d(a, "ssim");
  const View2d vb = as_2d(b, "ssim");
  if (va.h != vb.h || va.w != vb.w) throw std::invalid_argument("ssim: shape mismatch");
  if (va.h < kWindow || va.w < kWindow) throw std::invalid_argument("ssim: image smaller than window");

  double window[kWindow * kWindow];
  {
    double total = 0.0;
    const int r = kWindow / 2;
    for (int y = 0; y < kWindow; ++y) {
      for (int x = 0; x < kWindow; ++x) {
        const double dy = y - r, dx = x - r;
        const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
        window[y * kWindow + x] = g;
        total += g;
      }
    }
    for (double& wv : window) wv /= total;
  }

  const std::int64_t h = va.h, w = va.w;
  double acc = 0.0;
  std::int64_t count = 0;
  for (std::int64_t cy = 0; cy + kWindow <= h; ++cy) {
    for (std::int64_t cx = 0; cx + kWindow <= w; ++cx) {
      double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
      for (int y = 0; y < kWindow; ++y) {
        const double* ra = va.data + (cy + y) * w + cx;
        const double* rb = vb.data + (cy + y) * w + cx;
        const double* wr = window + y * kWindow;
        for (int x = 0; x < kWindow; ++x) {
          const double pa = ra[x], pb = rb[x], wv = wr[x];
          mu_a += wv * pa;
          mu_b += wv * pb;
          aa += wv * pa * pa;
          bb += wv * pb * pb;
          ab += wv * pa * pb;
        }
      }
      const double var_a = aa - mu_a * mu_a;
      const double var_b = bb - mu_b * mu_b;
      const double cov = ab - mu_a * mu_b;
      const double num = (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2);
      const double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
      acc += num / den;
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

}  // namespace prista
