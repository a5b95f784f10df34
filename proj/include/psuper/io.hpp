#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "psuper/grid.hpp"
#include "psuper/measure.hpp"

namespace psuper::io {

// Raw field format: one JSON header line {dim, cells[], extent[], measure}, a newline, then the
// node values as little-endian IEEE-754 doubles in row-major order.

struct RawField {
  GridFunction values;
  bool measure = false;
};

inline nlohmann::json grid_header(const Grid& g, bool measure) {
  nlohmann::json h;
  h["dim"] = g.dim();
  h["cells"] = nlohmann::json::array();
  h["extent"] = nlohmann::json::array();
  for (int a = 0; a < g.dim(); ++a) {
    h["cells"].push_back(g.nodes(a));
    h["extent"].push_back({g.lo(a), g.hi(a)});
  }
  h["measure"] = measure;
  return h;
}

inline Grid grid_from_header(const nlohmann::json& h) {
  const int dim = h.at("dim").get<int>();
  const auto& cells = h.at("cells");
  const auto& extent = h.at("extent");
  if (dim < 1 || dim > kMaxDim || cells.size() != static_cast<std::size_t>(dim) ||
      extent.size() != static_cast<std::size_t>(dim)) {
    throw InvalidArgument("raw field: inconsistent header");
  }
  std::vector<std::pair<double, double>> ext;
  std::vector<int> nodes;
  for (int a = 0; a < dim; ++a) {
    ext.emplace_back(extent[a].at(0).get<double>(), extent[a].at(1).get<double>());
    nodes.push_back(cells[a].get<int>());
  }
  return Grid(std::move(ext), std::move(nodes));
}

inline void write_le_double(std::ostream& os, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  if constexpr (std::endian::native == std::endian::big) {
    bits = __builtin_bswap64(bits);
  }
  char buf[8];
  std::memcpy(buf, &bits, 8);
  os.write(buf, 8);
}

inline double read_le_double(std::istream& is) {
  char buf[8];
  if (!is.read(buf, 8)) throw InvalidArgument("raw field: truncated payload");
  std::uint64_t bits = 0;
  std::memcpy(&bits, buf, 8);
  if constexpr (std::endian::native == std::endian::big) {
    bits = __builtin_bswap64(bits);
  }
  return std::bit_cast<double>(bits);
}

inline void write_raw(std::ostream& os, const GridFunction& f, bool measure = false) {
  os << grid_header(f.grid(), measure).dump() << '\n';
  for (double v : f.values()) write_le_double(os, v);
}

inline void write_raw(const std::filesystem::path& path, const GridFunction& f, bool measure = false) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  write_raw(os, f, measure);
}

inline void write_raw(const std::filesystem::path& path, const DiscreteMeasure& mu) { write_raw(path, mu.masses(), true); }

inline RawField read_raw(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("raw field: missing header");
  const auto h = nlohmann::json::parse(line);
  Grid g = grid_from_header(h);
  std::vector<double> v(g.size());
  for (double& x : v) x = read_le_double(is);
  return {GridFunction(std::move(g), std::move(v)), h.value("measure", false)};
}

inline RawField read_raw(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  return read_raw(is);
}

/// One file per slice: <stem>-<level>.raw.
inline std::vector<std::filesystem::path> write_raw_slices(const std::filesystem::path& dir, const std::string& stem,
                                                           const SpaceTimeFunction& f) {
  std::vector<std::filesystem::path> out;
  for (int k = 0; k < f.grid().levels(); ++k) {
    auto p = dir / (stem + "-" + std::to_string(k) + ".raw");
    write_raw(p, f.slice(k));
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace psuper::io
