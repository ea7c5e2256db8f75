#pragma once

// Binary field snapshots: "LANDAU01", u32 LE header length, JSON header,
// then little-endian float64 payload (components outermost).

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "landau/error.hpp"
#include "landau/grid.hpp"

namespace landau {

struct SnapshotHeader {
  int d = 3;
  int n = 0;
  double L = 0.0;
  double gamma = 0.0;
  double time = 0.0;
  std::string kind = "scalar";
};

struct Snapshot {
  SnapshotHeader header;
  std::vector<std::vector<double>> components;

  ScalarField scalar(GridPtr grid) const {
    if (header.kind != "scalar") throw IoError("snapshot is not a scalar field");
    return ScalarField(std::move(grid), components.at(0));
  }
};

namespace detail {

inline std::uint64_t to_le(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::little) return x;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((x >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

inline int component_count(const std::string& kind, int d) {
  if (kind == "scalar") return 1;
  if (kind == "vector") return d;
  if (kind == "matrix") return d * (d + 1) / 2;
  throw IoError("unknown snapshot kind '" + kind + "'");
}

}  // namespace detail

inline void write_snapshot(const std::filesystem::path& path, const SnapshotHeader& header,
                           const std::vector<const std::vector<double>*>& components) {
  nlohmann::json j = {{"d", header.d}, {"n", header.n}, {"L", header.L},
                      {"gamma", header.gamma}, {"time", header.time}, {"kind", header.kind}};
  std::string head = j.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open snapshot for writing: " + path.string());
  out.write("LANDAU01", 8);
  std::uint32_t len = static_cast<std::uint32_t>(head.size());
  unsigned char lenbytes[4] = {static_cast<unsigned char>(len & 0xff), static_cast<unsigned char>((len >> 8) & 0xff),
                               static_cast<unsigned char>((len >> 16) & 0xff), static_cast<unsigned char>((len >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(lenbytes), 4);
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (const auto* comp : components) {
    for (double x : *comp) {
      std::uint64_t bits;
      std::memcpy(&bits, &x, 8);
      bits = detail::to_le(bits);
      out.write(reinterpret_cast<const char*>(&bits), 8);
    }
  }
  if (!out) throw IoError("failed writing snapshot " + path.string());
}

inline void write_snapshot(const std::filesystem::path& path, const ScalarField& f, double gamma, double time) {
  const Grid& g = *f.grid;
  write_snapshot(path, {g.dim(), g.points(), g.extent(), gamma, time, "scalar"}, {&f.values});
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open snapshot: " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "LANDAU01", 8) != 0) throw IoError("bad snapshot magic in " + path.string());
  unsigned char lenbytes[4];
  in.read(reinterpret_cast<char*>(lenbytes), 4);
  std::uint32_t len = lenbytes[0] | (lenbytes[1] << 8) | (lenbytes[2] << 16) | (static_cast<std::uint32_t>(lenbytes[3]) << 24);
  std::string head(len, '\0');
  in.read(head.data(), len);
  if (!in) throw IoError("truncated snapshot header in " + path.string());
  Snapshot s;
  try {
    auto j = nlohmann::json::parse(head);
    s.header.d = j.at("d").get<int>();
    s.header.n = j.at("n").get<int>();
    s.header.L = j.at("L").get<double>();
    s.header.gamma = j.at("gamma").get<double>();
    s.header.time = j.at("time").get<double>();
    s.header.kind = j.at("kind").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad snapshot header in " + path.string() + ": " + e.what());
  }
  std::size_t count = 1;
  for (int a = 0; a < s.header.d; ++a) count *= static_cast<std::size_t>(s.header.n);
  int ncomp = detail::component_count(s.header.kind, s.header.d);
  s.components.assign(ncomp, std::vector<double>(count));
  for (auto& comp : s.components) {
    for (double& x : comp) {
      std::uint64_t bits;
      in.read(reinterpret_cast<char*>(&bits), 8);
      bits = detail::to_le(bits);
      std::memcpy(&x, &bits, 8);
    }
  }
  if (!in) throw IoError("truncated snapshot payload in " + path.string());
  return s;
}

}  // namespace landau
