#pragma once

// Binary snapshot format (all little-endian):
//   char[4]  magic "WLNS"
//   u32      version (1)
//   u32      n
//   f64      length
//   f64      time
//   u32      field count
//   then field count payloads of n^3 f64 each, x-fastest.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

#include "wlns/field.hpp"

namespace wlns {

struct Snapshot {
  Grid grid;
  double time = 0.0;
  std::vector<ScalarField> fields;
};

inline constexpr std::uint32_t kSnapshotVersion = 1;

namespace detail {

template <class T>
void write_le(std::ostream& os, T value) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <class T>
T read_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) throw Error("snapshot: truncated stream");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

}  // namespace detail

inline void write_snapshot(std::ostream& os, const Snapshot& snap) {
  os.write("WLNS", 4);
  detail::write_le<std::uint32_t>(os, kSnapshotVersion);
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(snap.grid.n()));
  detail::write_le<double>(os, snap.grid.length());
  detail::write_le<double>(os, snap.time);
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(snap.fields.size()));
  for (const ScalarField& f : snap.fields) {
    if (!(f.grid() == snap.grid)) throw Error("snapshot: field grid differs from header grid");
    for (double v : f.values()) detail::write_le<double>(os, v);
  }
  if (!os) throw Error("snapshot: write failed");
}

inline Snapshot read_snapshot(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "WLNS", 4) != 0) throw Error("snapshot: bad magic");
  const auto version = detail::read_le<std::uint32_t>(is);
  if (version != kSnapshotVersion) throw Error("snapshot: unsupported version " + std::to_string(version));
  const auto n = detail::read_le<std::uint32_t>(is);
  const double length = detail::read_le<double>(is);
  const double time = detail::read_le<double>(is);
  const auto count = detail::read_le<std::uint32_t>(is);
  Snapshot snap{Grid(static_cast<int>(n), length), time, {}};
  for (std::uint32_t c = 0; c < count; ++c) {
    std::vector<double> values(snap.grid.size());
    for (double& v : values) v = detail::read_le<double>(is);
    snap.fields.emplace_back(snap.grid, std::move(values));
  }
  return snap;
}

inline void write_snapshot_file(const std::filesystem::path& path, const Snapshot& snap) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("snapshot: cannot open " + path.string());
  write_snapshot(os, snap);
}

inline Snapshot read_snapshot_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("snapshot: cannot open " + path.string());
  return read_snapshot(is);
}

inline Snapshot velocity_snapshot(const VectorField& u, double time) {
  return Snapshot{u.grid(), time, {u[0], u[1], u[2]}};
}

inline VectorField velocity_from(const Snapshot& snap) {
  if (snap.fields.size() < 3) throw Error("snapshot: velocity needs 3 fields");
  return VectorField(snap.fields[0], snap.fields[1], snap.fields[2]);
}

}  // namespace wlns
