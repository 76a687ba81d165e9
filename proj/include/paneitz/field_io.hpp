#pragma once

// ScalarField persistence: raw little-endian binary64 plus a text sidecar,
// and a CSV export (index coordinates + value).
//
// Sidecar layout (one `key = value` per line):
//   format = paneitz-field-v1
//   d = 1
//   sizes = 64
//   L = 6.2831853071795862

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "paneitz/geometry.hpp"

namespace paneitz::io {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

inline std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

}  // namespace detail

inline std::filesystem::path sidecar_path(const std::filesystem::path& bin) {
  auto p = bin;
  p.replace_extension(".txt");
  return p;
}

inline void write_sidecar(const SpectralGrid& grid, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << std::setprecision(17);
  os << "format = paneitz-field-v1\n";
  os << "d = " << grid.dim() << "\n";
  os << "sizes = ";
  for (std::size_t i = 0; i < grid.sizes().size(); ++i) os << (i ? ", " : "") << grid.sizes()[i];
  os << "\nL = ";
  for (std::size_t i = 0; i < grid.lengths().size(); ++i) os << (i ? ", " : "") << grid.lengths()[i];
  os << "\n";
}

inline GridPtr read_sidecar(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open field descriptor " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }
  if (!kv.count("sizes") || !kv.count("L") || !kv.count("d"))
    throw Error("field descriptor " + path.string() + " needs d, sizes and L");
  std::vector<std::size_t> sizes;
  for (const auto& s : detail::split(kv["sizes"], ',')) sizes.push_back(std::stoul(s));
  std::vector<double> lengths;
  for (const auto& s : detail::split(kv["L"], ',')) lengths.push_back(std::stod(s));
  if (std::stoi(kv["d"]) != static_cast<int>(sizes.size()))
    throw Error("field descriptor " + path.string() + ": d disagrees with sizes");
  return make_grid(std::move(sizes), std::move(lengths));
}

/// Writes `path` (binary) and its `.txt` sidecar.
inline void write_binary(const ScalarField& u, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  for (double v : u.values()) {
    const auto le = detail::to_little_endian(std::bit_cast<std::uint64_t>(v));
    char bytes[8];
    std::memcpy(bytes, &le, 8);
    os.write(bytes, 8);
  }
  write_sidecar(u.grid(), sidecar_path(path));
}

inline ScalarField read_binary(const std::filesystem::path& path) {
  GridPtr grid = read_sidecar(sidecar_path(path));
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open field " + path.string());
  std::vector<double> values(grid->point_count());
  for (auto& v : values) {
    char bytes[8];
    if (!is.read(bytes, 8)) throw Error("field " + path.string() + " is shorter than its descriptor says");
    std::uint64_t le;
    std::memcpy(&le, bytes, 8);
    v = std::bit_cast<double>(detail::to_little_endian(le));
  }
  if (is.peek() != std::char_traits<char>::eof())
    throw Error("field " + path.string() + " is longer than its descriptor says");
  ScalarField u(grid, std::move(values));
  if (!u.all_finite()) throw Error("field " + path.string() + " contains non-finite values");
  return u;
}

/// CSV with columns i0[,i1[,i2]],x0[,x1[,x2]],value.
inline void write_csv(const ScalarField& u, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  const auto& grid = u.grid();
  const int d = grid.dim();
  os << std::setprecision(17);
  for (int a = 0; a < d; ++a) os << "i" << a << ",";
  for (int a = 0; a < d; ++a) os << "x" << a << ",";
  os << "value\n";
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto m = grid.multi_index(i);
    const auto x = grid.coordinates(i);
    for (int a = 0; a < d; ++a) os << m[a] << ",";
    for (int a = 0; a < d; ++a) os << x[a] << ",";
    os << u[i] << "\n";
  }
}

/// Reads a CSV written by write_csv (or any CSV whose last column is the
/// value, in row-major order) onto an existing grid.
inline ScalarField read_csv(const std::filesystem::path& path, GridPtr grid) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open field " + path.string());
  std::vector<double> values;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto cols = detail::split(line, ',');
    if (first) {
      first = false;
      // Header row is optional.
      try {
        std::size_t pos = 0;
        std::stod(cols.back(), &pos);
      } catch (const std::exception&) {
        continue;
      }
    }
    values.push_back(std::stod(cols.back()));
  }
  if (values.size() != grid->point_count())
    throw Error("CSV field " + path.string() + " has " + std::to_string(values.size()) +
                " values, grid needs " + std::to_string(grid->point_count()));
  return ScalarField(std::move(grid), std::move(values));
}

}  // namespace paneitz::io
