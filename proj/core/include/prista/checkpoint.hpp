#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prista/tensor.hpp"

namespace prista {

struct NamedTensors {
  std::vector<std::pair<std::string, Tensor>> items;

  void add(std::string name, Tensor t) { items.emplace_back(std::move(name), std::move(t)); }
  const Tensor* find(std::string_view name) const;
  const Tensor& get(std::string_view name) const;  // throws if absent
};

/// Tensor container: magic "PRNT", u32 version, u32 tensor count; per tensor
/// u16 name length, UTF-8 name, u8 dtype (0 = f32, 1 = f64), u8 ndim,
/// u64 dims[], little-endian payload; then a u64-length-prefixed UTF-8 JSON
/// metadata blob. Writes go to a temp file and are renamed into place.
void write_container(const std::string& path, const NamedTensors& tensors,
                     const std::string& meta_json);

struct Container {
  NamedTensors tensors;
  std::string meta_json;
};

Container read_container(const std::string& path);

inline constexpr std::uint32_t kContainerVersion = 1;

}  // namespace prista
