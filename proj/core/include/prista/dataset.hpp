#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prista/tensor.hpp"

namespace prista {

/// All *.pgm files in a directory, sorted by filename, as [h, w] tensors
/// in [0, 1].
std::vector<Tensor> load_pgm_dir(const std::string& dir);

/// Synthetic piecewise-smooth n-by-n grayscale patches (gradients,
/// rectangles, blobs, light texture), values in [0, 1]. Deterministic in
/// (count, n, seed).
std::vector<Tensor> make_patches(int count, std::int64_t n, std::uint64_t seed);

/// Writes patches as 0000.pgm, 0001.pgm, ... into an existing directory.
void write_patches(const std::string& dir, const std::vector<Tensor>& patches);

/// Center-crop to n-by-n; throws if the image is smaller.
Tensor center_crop(const Tensor& img, std::int64_t n);

}  // namespace prista
