#include "prista/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <stdexcept>

#include "prista/pgm.hpp"
#include "prista/rng.hpp"

namespace prista {

std::vector<Tensor> load_pgm_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw std::runtime_error("load_pgm_dir: not a directory: " + dir);
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      paths.push_back(entry.path().string());
    }
  }
  std::sort(paths.begin(), paths.end());
  std::vector<Tensor> images;
  images.reserve(paths.size());
  for (const std::string& p : paths) images.push_back(read_pgm(p));
  return images;
}

std::vector<Tensor> make_patches(int count, std::int64_t n, std::uint64_t seed) {
  std::vector<Tensor> patches;
  patches.reserve(static_cast<std::size_t>(count));
  for (int idx = 0; idx < count; ++idx) {
    Rng rng(Rng::derive(Rng::derive(seed, "patch"), static_cast<std::uint64_t>(idx)));
    Tensor img({n, n});
    const double base = rng.uniform(0.25, 0.6);
    const double gx = rng.uniform(-0.3, 0.3);
    const double gy = rng.uniform(-0.3, 0.3);
    for (std::int64_t y = 0; y < n; ++y) {
      for (std::int64_t x = 0; x < n; ++x) {
        img.at(y, x) = base + gx * static_cast<double>(x) / static_cast<double>(n) +
                       gy * static_cast<double>(y) / static_cast<double>(n);
      }
    }
    const int rects = 1 + static_cast<int>(rng.next_u64() % 3);
    for (int r = 0; r < rects; ++r) {
      std::int64_t x0 = static_cast<std::int64_t>(rng.uniform(0.0, static_cast<double>(n - 4)));
      std::int64_t y0 = static_cast<std::int64_t>(rng.uniform(0.0, static_cast<double>(n - 4)));
      std::int64_t x1 = x0 + 3 + static_cast<std::int64_t>(rng.uniform(0.0, static_cast<double>(n) / 2.0));
      std::int64_t y1 = y0 + 3 + static_cast<std::int64_t>(rng.uniform(0.0, static_cast<double>(n) / 2.0));
      x1 = std::min(x1, n);
      y1 = std::min(y1, n);
      const double amp = rng.uniform(0.15, 0.45) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
      for (std::int64_t y = y0; y < y1; ++y) {
        for (std::int64_t x = x0; x < x1; ++x) img.at(y, x) += amp;
      }
    }
    const int blobs = 1 + static_cast<int>(rng.next_u64() % 2);
    for (int b = 0; b < blobs; ++b) {
      const double cx = rng.uniform(0.0, static_cast<double>(n));
      const double cy = rng.uniform(0.0, static_cast<double>(n));
      const double sg = rng.uniform(1.5, static_cast<double>(n) / 5.0);
      const double amp = rng.uniform(0.2, 0.5) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
      for (std::int64_t y = 0; y < n; ++y) {
        for (std::int64_t x = 0; x < n; ++x) {
          const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
          img.at(y, x) += amp * std::exp(-(dx * dx + dy * dy) / (2.0 * sg * sg));
        }
      }
    }
    if (rng.uniform() < 0.5) {
      const double amp = rng.uniform(0.02, 0.1);
      const double fx = rng.uniform(0.5, 3.0), fy = rng.uniform(0.5, 3.0);
      const double ph = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (std::int64_t y = 0; y < n; ++y) {
        for (std::int64_t x = 0; x < n; ++x) {
          img.at(y, x) += amp * std::sin(2.0 * std::numbers::pi *
                                             (fx * static_cast<double>(x) / static_cast<double>(n) +
                                              fy * static_cast<double>(y) / static_cast<double>(n)) +
                                         ph);
        }
      }
    }
    for (std::int64_t i = 0; i < img.size(); ++i) img[i] = std::min(1.0, std::max(0.0, img[i]));
    patches.push_back(std::move(img));
  }
  return patches;
}

void write_patches(const std::string& dir, const std::vector<Tensor>& patches) {
  for (std::size_t i = 0; i < patches.size(); ++i) {
    char name[16];
    std::snprintf(name, sizeof(name), "%04zu.pgm", i);
    write_pgm(dir + "/" + name, patches[i]);
  }
}

Tensor center_crop(const Tensor& img, std::int64_t n) {
  if (img.rank() != 2) throw std::invalid_argument("center_crop: expected [h,w]");
  const std::int64_t h = img.extent(0), w = img.extent(1);
  if (h < n || w < n) {
    throw std::runtime_error("center_crop: image " + shape_string(img.shape()) +
                             " smaller than requested side " + std::to_string(n));
  }
  const std::int64_t y0 = (h - n) / 2, x0 = (w - n) / 2;
  Tensor out({n, n});
  for (std::int64_t y = 0; y < n; ++y) {
    for (std::int64_t x = 0; x < n; ++x) out.at(y, x) = img.at(y0 + y, x0 + x);
  }
  return out;
}

}  // namespace prista
