// Feature-map file format:
//   magic "MFCM", u32 version=1, u32 p, u32 t, then p*t little-endian f32
//   values in row-major (coefficient-major) order. Round-trips bit-exactly.
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "speechfcn/common.hpp"
#include "speechfcn/mfcc.hpp"

namespace speechfcn {

namespace detail {

inline void put_u32le(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32le(std::ifstream& f, const std::string& path) {
  unsigned char b[4];
  if (!f.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorKind::format, path + ": truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

// f32 payloads are written verbatim; this build targets little-endian hosts.
static_assert(sizeof(float) == 4, "float must be 32-bit");

}  // namespace detail

inline void save_feature_map(const std::string& path, const FeatureMap& map) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot write " + path);
  f.write("MFCM", 4);
  detail::put_u32le(f, 1);
  detail::put_u32le(f, static_cast<std::uint32_t>(map.p));
  detail::put_u32le(f, static_cast<std::uint32_t>(map.t));
  f.write(reinterpret_cast<const char*>(map.values.data()),
          static_cast<std::streamsize>(map.values.size() * sizeof(float)));
  if (!f) throw Error(ErrorKind::io, "write failed for " + path);
}

inline FeatureMap load_feature_map(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot open " + path);
  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, "MFCM", 4) != 0)
    throw Error(ErrorKind::format, path + ": bad magic");
  const std::uint32_t version = detail::get_u32le(f, path);
  if (version != 1) throw Error(ErrorKind::unsupported, path + ": unsupported version");
  const std::uint32_t p = detail::get_u32le(f, path);
  const std::uint32_t t = detail::get_u32le(f, path);
  if (p == 0 || t == 0) throw Error(ErrorKind::format, path + ": empty dimensions");

  FeatureMap map(static_cast<int>(p), static_cast<long>(t));
  if (!f.read(reinterpret_cast<char*>(map.values.data()),
              static_cast<std::streamsize>(map.values.size() * sizeof(float))))
    throw Error(ErrorKind::format, path + ": truncated payload");
  char extra;
  if (f.read(&extra, 1)) throw Error(ErrorKind::format, path + ": trailing bytes");
  return map;
}

}  // namespace speechfcn
