#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace prista {

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

const char* dtype_name(DType dt);
std::size_t dtype_bytes(DType dt);

using Shape = std::vector<std::int64_t>;

/// Dense row-major real tensor (outermost extent first).
///
/// Arithmetic always runs in double. The dtype tag selects the serialized
/// width; an f32-tagged tensor keeps every value rounded to float precision
/// so that narrowing on write and widening on read are lossless.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, DType dt = DType::f64);

  static Tensor zeros(Shape shape, DType dt = DType::f64);
  static Tensor ones(Shape shape, DType dt = DType::f64);
  static Tensor full(Shape shape, double value, DType dt = DType::f64);
  static Tensor scalar(double value, DType dt = DType::f64);
  static Tensor from_data(Shape shape, std::vector<double> data, DType dt = DType::f64);

  const Shape& shape() const { return shape_; }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::int64_t extent(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
  DType dtype() const { return dtype_; }

  /// Copy with values rounded to the target precision.
  Tensor astype(DType dt) const;

  /// Same data under a new shape of equal total size.
  Tensor reshaped(Shape shape) const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }
  double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }

  // Index helpers for the common ranks; no bounds checks.
  double& at(std::int64_t i, std::int64_t j) { return data_[static_cast<std::size_t>(i * shape_[1] + j)]; }
  double at(std::int64_t i, std::int64_t j) const { return data_[static_cast<std::size_t>(i * shape_[1] + j)]; }
  double& at(std::int64_t c, std::int64_t i, std::int64_t j) {
    return data_[static_cast<std::size_t>((c * shape_[1] + i) * shape_[2] + j)];
  }
  double at(std::int64_t c, std::int64_t i, std::int64_t j) const {
    return data_[static_cast<std::size_t>((c * shape_[1] + i) * shape_[2] + j)];
  }

  void fill(double value);

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  double sum() const;
  double max_abs() const;
  double norm2() const;

  bool is_scalar() const { return size() == 1; }
  double scalar_value() const { return data_[0]; }

 private:
  Shape shape_;
  std::vector<double> data_;
  DType dtype_ = DType::f64;
};

std::string shape_string(const Shape& s);
std::int64_t shape_size(const Shape& s);

}  // namespace prista
