#include "prista/pgm.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace prista {

namespace {

// Skips whitespace and '#' comment lines between header tokens.
int next_header_int(std::istream& is, const std::string& path) {
  for (;;) {
    int c = is.get();
    if (c == EOF) throw std::runtime_error("pgm: truncated header in " + path);
    if (std::isspace(c)) continue;
    if (c == '#') {
      std::string line;
      std::getline(is, line);
      continue;
    }
    is.unget();
    int v = 0;
    if (!(is >> v)) throw std::runtime_error("pgm: malformed header in " + path);
    return v;
  }
}

void atomic_write(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("pgm: cannot open " + tmp);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw std::runtime_error("pgm: short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

Tensor read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("pgm: cannot open " + path);
  char m0 = 0, m1 = 0;
  is.get(m0);
  is.get(m1);
  if (m0 != 'P' || m1 != '5') throw std::runtime_error("pgm: not a binary PGM (P5): " + path);
  const int w = next_header_int(is, path);
  const int h = next_header_int(is, path);
  const int maxval = next_header_int(is, path);
  if (w <= 0 || h <= 0) throw std::runtime_error("pgm: bad dimensions in " + path);
  if (maxval != 255) throw std::runtime_error("pgm: only 8-bit PGM supported: " + path);
  is.get();  // single whitespace after maxval
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (is.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw std::runtime_error("pgm: truncated pixel data in " + path);
  }
  Tensor img({h, w});
  for (std::size_t i = 0; i < raw.size(); ++i) {
    img[static_cast<std::int64_t>(i)] = static_cast<double>(raw[i]) / 255.0;
  }
  return img;
}

void write_pgm(const std::string& path, const Tensor& img) {
  if (img.rank() != 2 && !(img.rank() == 3 && img.extent(0) == 1)) {
    throw std::invalid_argument("write_pgm: expected [h,w] or [1,h,w]");
  }
  const std::int64_t h = img.extent(img.rank() - 2);
  const std::int64_t w = img.extent(img.rank() - 1);
  std::string bytes = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  bytes.reserve(bytes.size() + static_cast<std::size_t>(h * w));
  for (std::int64_t i = 0; i < h * w; ++i) {
    const double v = std::min(1.0, std::max(0.0, img[i]));
    bytes.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
  }
  atomic_write(path, bytes);
}

void write_raw_f32(const std::string& path, const Tensor& t) {
  std::string bytes;
  bytes.reserve(static_cast<std::size_t>(t.size()) * 4);
  for (std::int64_t i = 0; i < t.size(); ++i) {
    const std::uint32_t u = std::bit_cast<std::uint32_t>(static_cast<float>(t[i]));
    for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<char>((u >> (8 * b)) & 0xFF));
  }
  atomic_write(path, bytes);
}

Tensor read_raw_f32(const std::string& path, Shape shape) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("raw_f32: cannot open " + path);
  const std::int64_t n = shape_size(shape);
  std::vector<double> values(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (is.gcount() != 4) throw std::runtime_error("raw_f32: truncated file " + path);
    std::uint32_t u = 0;
    for (int k = 0; k < 4; ++k) u |= static_cast<std::uint32_t>(b[k]) << (8 * k);
    values[static_cast<std::size_t>(i)] = static_cast<double>(std::bit_cast<float>(u));
  }
  return Tensor::from_data(std::move(shape), std::move(values), DType::f32);
}

}  // namespace prista
