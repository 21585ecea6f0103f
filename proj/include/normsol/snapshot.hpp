#ifndef NORMSOL_SNAPSHOT_HPP
#define NORMSOL_SNAPSHOT_HPP

// Binary Field snapshots.
//
// Layout (all little-endian):
//   8 bytes  magic "NSOLFLD1"
//   int32    dimension N
//   int32    points per axis M
//   float64  half width L
//   int32    boundary (0 periodic_spectral, 1 dirichlet_fd)
//   float64  M^N samples, row-major (last axis fastest)

#include "normsol/errors.hpp"
#include "normsol/grid.hpp"
#include "normsol/report.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <stdexcept>
#include <type_traits>
#include <vector>

namespace normsol {

class SnapshotError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline constexpr char snapshot_magic[9] = "NSOLFLD1";

template <typename T> void put_le(std::ostream &os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> b;
  std::memcpy(b.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(b.begin(), b.end());
  os.write(reinterpret_cast<const char *>(b.data()), sizeof(T));
}

template <typename T> T get_le(std::istream &is) {
  std::array<unsigned char, sizeof(T)> b;
  if (!is.read(reinterpret_cast<char *>(b.data()), sizeof(T)))
    throw SnapshotError("truncated snapshot");
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(b.begin(), b.end());
  T v;
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

} // namespace detail

inline void write_snapshot(std::ostream &os, const Field &u) {
  const Grid &g = u.grid();
  os.write(detail::snapshot_magic, 8);
  detail::put_le<std::int32_t>(os, g.dimension());
  detail::put_le<std::int32_t>(os, g.points());
  detail::put_le<double>(os, g.half_width());
  detail::put_le<std::int32_t>(os, g.periodic() ? 0 : 1);
  for (double v : u.values())
    detail::put_le<double>(os, v);
}

inline Field read_snapshot(std::istream &is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, detail::snapshot_magic, 8) != 0)
    throw SnapshotError("not a field snapshot (bad magic)");
  const auto n = detail::get_le<std::int32_t>(is);
  const auto m = detail::get_le<std::int32_t>(is);
  const auto half = detail::get_le<double>(is);
  const auto b = detail::get_le<std::int32_t>(is);
  if (b != 0 && b != 1)
    throw SnapshotError("unknown boundary flag in snapshot");
  Grid g = [&] {
    try {
      return Grid(n, half, m, b == 0 ? Boundary::periodic_spectral : Boundary::dirichlet_fd);
    } catch (const std::exception &e) {
      throw SnapshotError(std::string("invalid grid in snapshot: ") + e.what());
    }
  }();
  std::vector<double> values(g.size());
  for (double &v : values)
    v = detail::get_le<double>(is);
  if (is.peek() != std::char_traits<char>::eof())
    throw SnapshotError("trailing bytes after snapshot samples");
  return Field(g, std::move(values));
}

inline void save_snapshot(const std::filesystem::path &path, const Field &u) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os)
    throw SnapshotError("cannot open " + path.string() + " for writing");
  write_snapshot(os, u);
  if (!os)
    throw SnapshotError("failed writing " + path.string());
}

inline Field load_snapshot(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw SnapshotError("cannot open snapshot " + path.string());
  return read_snapshot(is);
}

/// Flow checkpoint: u1.snap, u2.snap and state.txt inside one directory.
struct Checkpoint {
  Field u1;
  Field u2;
  double dt = 0.0;
  int iteration = 0;
  int stall_count = 0;
  int restart = 0;
};

inline void save_checkpoint(const std::filesystem::path &dir, const Checkpoint &c) {
  std::filesystem::create_directories(dir);
  save_snapshot(dir / "u1.snap", c.u1);
  save_snapshot(dir / "u2.snap", c.u2);
  std::ofstream os(dir / "state.txt", std::ios::trunc);
  os << "iteration = " << c.iteration << '\n';
  os << "dt = " << format_double(c.dt) << '\n';
  os << "stall_count = " << c.stall_count << '\n';
  os << "restart = " << c.restart << '\n';
  if (!os)
    throw SnapshotError("failed writing checkpoint state in " + dir.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path &dir) {
  Checkpoint c{load_snapshot(dir / "u1.snap"), load_snapshot(dir / "u2.snap")};
  if (!(c.u1.grid() == c.u2.grid()))
    throw SnapshotError("checkpoint fields live on different grids");
  std::ifstream is(dir / "state.txt");
  if (!is)
    throw SnapshotError("missing state.txt in checkpoint " + dir.string());
  std::string line;
  bool seen[4] = {false, false, false, false};
  while (std::getline(is, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos)
      continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 3);
    try {
      if (key == "iteration") {
        c.iteration = std::stoi(value);
        seen[0] = true;
      } else if (key == "dt") {
        c.dt = parse_double(value);
        seen[1] = true;
      } else if (key == "stall_count") {
        c.stall_count = std::stoi(value);
        seen[2] = true;
      } else if (key == "restart") {
        c.restart = std::stoi(value);
        seen[3] = true;
      }
    } catch (const std::exception &) {
      throw SnapshotError("bad value for '" + key + "' in checkpoint state");
    }
  }
  for (bool s : seen)
    if (!s)
      throw SnapshotError("incomplete checkpoint state in " + dir.string());
  return c;
}

} // namespace normsol

#endif
