#pragma once

#include <string>

#include "prista/tensor.hpp"

namespace prista {

/// 8-bit binary PGM (P5), mapped to [0, 1] by /255.
Tensor read_pgm(const std::string& path);

/// Clamps to [0, 1], rounds to 8-bit. Atomic (temp + rename).
void write_pgm(const std::string& path, const Tensor& img);

/// Little-endian f32 payload, row-major, no header. Atomic.
void write_raw_f32(const std::string& path, const Tensor& t);
Tensor read_raw_f32(const std::string& path, Shape shape);

}  // namespace prista
