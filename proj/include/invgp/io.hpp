#pragma once

// Artifact output: atomic file writes, the raw sample dump and the run manifest.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "numeric.hpp"

#ifndef INVGP_VERSION
#define INVGP_VERSION "0.0.0"
#endif

namespace invgp {

inline constexpr const char* kPackageVersion = INVGP_VERSION;
inline constexpr int kManifestSchema = 1;

/// Writes to a sibling temp file, then renames over the target.
inline void atomic_write(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open for writing: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw ConfigError("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw ConfigError("cannot rename into place: " + path.string());
  }
}

template <class Writer>
void atomic_write_with(const std::filesystem::path& path, Writer&& writer) {
  std::ostringstream os;
  writer(os);
  atomic_write(path, os.str());
}

inline void atomic_write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  atomic_write(path, j.dump(2) + "\n");
}

/// Little-endian interleaved float64 (re, im) plus a JSON sidecar at path + ".json".
inline void write_sample_dump(const std::filesystem::path& path, std::span<const cplx> samples,
                              nlohmann::json header) {
  std::string bytes(samples.size() * 16, '\0');
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double parts[2] = {samples[i].real(), samples[i].imag()};
    for (int p = 0; p < 2; ++p) {
      auto bits = std::bit_cast<std::uint64_t>(parts[p]);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      std::memcpy(bytes.data() + 16 * i + 8 * p, &bits, 8);
    }
  }
  atomic_write(path, bytes);
  header["format"] = "float64-le-interleaved";
  header["count"] = samples.size();
  header["file"] = path.filename().string();
  auto sidecar = path;
  sidecar += ".json";
  atomic_write_json(sidecar, header);
}

inline std::vector<cplx> read_sample_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open sample dump: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 16 != 0) throw ConfigError("sample dump length is not a multiple of 16 bytes");
  std::vector<cplx> out(bytes.size() / 16);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double parts[2];
    for (int p = 0; p < 2; ++p) {
      std::uint64_t bits;
      std::memcpy(&bits, bytes.data() + 16 * i + 8 * p, 8);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
      parts[p] = std::bit_cast<double>(bits);
    }
    out[i] = cplx(parts[0], parts[1]);
  }
  return out;
}

struct RunManifest {
  std::string subcommand;
  nlohmann::json parameters = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;
  double wall_time_s = 0.0;

  nlohmann::json to_json() const {
    return {{"schema", kManifestSchema},     {"package_version", kPackageVersion},
            {"subcommand", subcommand},      {"parameters", parameters},
            {"seed", seed},                  {"artifacts", artifacts},
            {"wall_time_s", wall_time_s}};
  }
};

}  // namespace invgp
