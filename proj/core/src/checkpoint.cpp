#include "prista/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace prista {

namespace {

constexpr char kMagic[4] = {'P', 'R', 'N', 'T'};

void put_u16(std::string& buf, std::uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xFF));
  buf.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& buf, double v) { put_u64(buf, std::bit_cast<std::uint64_t>(v)); }

void put_f32(std::string& buf, float v) { put_u32(buf, std::bit_cast<std::uint32_t>(v)); }

class Reader {
 public:
  Reader(const std::string& data, const std::string& path) : data_(data), path_(path) {}

  std::uint16_t u16() { return static_cast<std::uint16_t>(u_le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(u_le(4)); }
  std::uint64_t u64() { return u_le(8); }
  std::uint8_t u8() { return static_cast<std::uint8_t>(u_le(1)); }
  double f64() { return std::bit_cast<double>(u64()); }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  std::uint64_t u_le(std::size_t n) {
    need(n);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += n;
    return v;
  }

  void need(std::size_t n) {
    if (pos_ + n > data_.size()) {
      throw std::runtime_error("container: truncated file " + path_);
    }
  }

  const std::string& data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor* NamedTensors::find(std::string_view name) const {
  for (const auto& [n, t] : items) {
    if (n == name) return &t;
  }
  return nullptr;
}

const Tensor& NamedTensors::get(std::string_view name) const {
  const Tensor* t = find(name);
  if (!t) throw std::runtime_error("container: missing tensor '" + std::string(name) + "'");
  return *t;
}

void write_container(const std::string& path, const NamedTensors& tensors,
                     const std::string& meta_json) {
  std::string buf;
  buf.append(kMagic, 4);
  put_u32(buf, kContainerVersion);
  put_u32(buf, static_cast<std::uint32_t>(tensors.items.size()));
  for (const auto& [name, t] : tensors.items) {
    if (name.size() > 0xFFFF) throw std::invalid_argument("container: tensor name too long");
    put_u16(buf, static_cast<std::uint16_t>(name.size()));
    buf.append(name);
    buf.push_back(static_cast<char>(t.dtype()));
    buf.push_back(static_cast<char>(t.rank()));
    for (std::int64_t e : t.shape()) put_u64(buf, static_cast<std::uint64_t>(e));
    const double* d = t.data();
    if (t.dtype() == DType::f32) {
      for (std::int64_t i = 0; i < t.size(); ++i) put_f32(buf, static_cast<float>(d[i]));
    } else {
      for (std::int64_t i = 0; i < t.size(); ++i) put_f64(buf, d[i]);
    }
  }
  put_u64(buf, meta_json.size());
  buf.append(meta_json);

  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("container: cannot open " + tmp + " for writing");
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os) throw std::runtime_error("container: short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Container read_container(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("container: cannot open " + path);
  std::string data((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  Reader r(data, path);
  if (r.bytes(4) != std::string(kMagic, 4)) {
    throw std::runtime_error("container: bad magic in " + path);
  }
  const std::uint32_t version = r.u32();
  if (version != kContainerVersion) {
    throw std::runtime_error("container: unsupported version " + std::to_string(version));
  }
  Container out;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t name_len = r.u16();
    std::string name = r.bytes(name_len);
    const auto dtype = static_cast<DType>(r.u8());
    if (dtype != DType::f32 && dtype != DType::f64) {
      throw std::runtime_error("container: bad dtype for tensor '" + name + "'");
    }
    const std::uint8_t ndim = r.u8();
    Shape shape(ndim);
    for (std::uint8_t d = 0; d < ndim; ++d) shape[d] = static_cast<std::int64_t>(r.u64());
    const std::int64_t n = shape_size(shape);
    std::vector<double> values(static_cast<std::size_t>(n));
    if (dtype == DType::f32) {
      for (std::int64_t k = 0; k < n; ++k) values[static_cast<std::size_t>(k)] = r.f32();
    } else {
      for (std::int64_t k = 0; k < n; ++k) values[static_cast<std::size_t>(k)] = r.f64();
    }
    out.tensors.add(std::move(name), Tensor::from_data(std::move(shape), std::move(values), dtype));
  }
  const std::uint64_t meta_len = r.u64();
  out.meta_json = r.bytes(meta_len);
  if (!r.done()) throw std::runtime_error("container: trailing bytes in " + path);
  return out;
}

}  // namespace prista
