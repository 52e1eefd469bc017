#include "prista/manifest.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "prista/rng.hpp"

namespace prista {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const std::string& dir, const RunManifest& m) {
  nlohmann::json j{
      {"command", m.command},
      {"argv", m.argv},
      {"prng", m.prng.empty() ? Rng::kAlgorithm : m.prng},
      {"version", m.version.empty() ? kVersion : m.version},
      {"started_utc", m.started_utc},
      {"finished_utc", m.finished_utc},
  };
  const std::string path = dir + "/run_manifest.json";
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw std::runtime_error("manifest: cannot open " + tmp);
    os << j.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("manifest: cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(is);
  RunManifest m;
  m.command = j.value("command", "");
  m.argv = j.value("argv", std::vector<std::string>{});
  m.prng = j.value("prng", "");
  m.version = j.value("version", "");
  m.started_utc = j.value("started_utc", "");
  m.finished_utc = j.value("finished_utc", "");
  return m;
}

}  // namespace prista
