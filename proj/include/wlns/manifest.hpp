#pragma once

// Run manifest: config snapshot, version, seed, wall times and a SHA-256
// inventory of every output file. Hashing needs libcrypto.

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wlns/error.hpp"

#ifndef WLNS_VERSION
#define WLNS_VERSION "0.0.0"
#endif

namespace wlns {

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("sha256: cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256: init failed");
  std::array<char, 1 << 16> buf{};
  while (is) {
    is.read(buf.data(), buf.size());
    if (is.gcount() > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(is.gcount())) != 1)
      throw Error("sha256: update failed");
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) throw Error("sha256: final failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct ManifestFile {
  std::string path;  ///< relative to the output directory
  std::uintmax_t bytes = 0;
  std::string sha256;
};

struct RunManifest {
  std::string command;
  std::string version = WLNS_VERSION;
  std::string config;  ///< canonical INI text
  std::uint64_t seed = 0;
  int threads = 1;
  std::string started;
  std::string finished;
  double wall_seconds = 0.0;
  int exit_code = 0;
  std::string status;
  std::vector<ManifestFile> files;

  /// Hashes every regular file under `dir` except manifest.json, in path order.
  void inventory(const std::filesystem::path& dir) {
    files.clear();
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
      if (!e.is_regular_file()) continue;
      const auto rel = std::filesystem::relative(e.path(), dir).generic_string();
      if (rel == "manifest.json") continue;
      files.push_back({rel, e.file_size(), sha256_file(e.path())});
    }
    std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["version"] = version;
    j["seed"] = seed;
    j["threads"] = threads;
    j["started"] = started;
    j["finished"] = finished;
    j["wall_seconds"] = wall_seconds;
    j["exit_code"] = exit_code;
    j["status"] = status;
    j["config"] = config;
    auto& arr = j["files"] = nlohmann::ordered_json::array();
    for (const auto& f : files) arr.push_back({{"path", f.path}, {"bytes", f.bytes}, {"sha256", f.sha256}});
    return j;
  }

  void write(const std::filesystem::path& dir) const {
    std::ofstream os(dir / "manifest.json");
    if (!os) throw Error("cannot write " + (dir / "manifest.json").string());
    os << to_json().dump(2) << '\n';
  }
};

}  // namespace wlns
