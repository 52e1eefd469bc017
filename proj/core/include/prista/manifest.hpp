#pragma once

#include <string>
#include <vector>

namespace prista {

inline constexpr const char* kVersion = "0.1.0";

/// Reproduction record written into every output directory. Re-invoking the
/// stored argv reproduces the run's outputs byte for byte (timestamps live
/// only in the manifest itself).
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::string prng;
  std::string version;
  std::string started_utc;
  std::string finished_utc;
};

void write_manifest(const std::string& dir, const RunManifest& m);
RunManifest read_manifest(const std::string& path);

std::string utc_timestamp();

}  // namespace prista
