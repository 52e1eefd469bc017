#include "prista/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace prista {

const char* dtype_name(DType dt) { return dt == DType::f32 ? "f32" : "f64"; }

std::size_t dtype_bytes(DType dt) { return dt == DType::f32 ? 4 : 8; }

std::int64_t shape_size(const Shape& s) {
  std::int64_t n = 1;
  for (std::int64_t e : s) n *= e;
  return n;
}

std::string shape_string(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ", ";
    os << s[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, DType dt) : shape_(std::move(shape)), dtype_(dt) {
  for (std::int64_t e : shape_) {
    if (e <= 0) throw std::invalid_argument("Tensor: non-positive extent in shape " + shape_string(shape_));
  }
  data_.assign(static_cast<std::size_t>(shape_size(shape_)), 0.0);
}

Tensor Tensor::zeros(Shape shape, DType dt) { return Tensor(std::move(shape), dt); }

Tensor Tensor::ones(Shape shape, DType dt) { return full(std::move(shape), 1.0, dt); }

Tensor Tensor::full(Shape shape, double value, DType dt) {
  Tensor t(std::move(shape), dt);
  t.fill(value);
  return t;
}

Tensor Tensor::scalar(double value, DType dt) { return full({1}, value, dt); }

Tensor Tensor::from_data(Shape shape, std::vector<double> data, DType dt) {
  Tensor t;
  t.shape_ = std::move(shape);
  t.dtype_ = dt;
  if (static_cast<std::int64_t>(data.size()) != shape_size(t.shape_)) {
    throw std::invalid_argument("Tensor: data length " + std::to_string(data.size()) +
                                " does not match shape " + shape_string(t.shape_));
  }
  t.data_ = std::move(data);
  if (dt == DType::f32) {
    for (double& v : t.data_) v = static_cast<double>(static_cast<float>(v));
  }
  return t;
}

Tensor Tensor::astype(DType dt) const {
  Tensor t = *this;
  t.dtype_ = dt;
  if (dt == DType::f32) {
    for (double& v : t.data_) v = static_cast<double>(static_cast<float>(v));
  }
  return t;
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != size()) {
    throw std::invalid_argument("reshaped: size mismatch " + shape_string(shape_) + " -> " +
                                shape_string(shape));
  }
  Tensor t = *this;
  t.shape_ = std::move(shape);
  return t;
}

void Tensor::fill(double value) {
  if (dtype_ == DType::f32) value = static_cast<double>(static_cast<float>(value));
  for (double& v : data_) v = value;
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double Tensor::sum() const {
  double s = 0.0;
  for (double v : data_) s += v;
  return s;
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double Tensor::norm2() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

}  // namespace prista
