// Weight file format:
//   magic "FCNW", u32 version=1, u32 tensor count; per tensor: u16 name
//   length, UTF-8 name, u8 rank, u32 extents, little-endian f32 payload.
// This is also the import path for externally pretrained backbone weights.
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "speechfcn/common.hpp"
#include "speechfcn/tensor.hpp"

namespace speechfcn {

inline void save_weights(const std::string& path,
                         const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot write " + path);
  auto put_u32 = [&](std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    f.write(reinterpret_cast<const char*>(b), 4);
  };
  f.write("FCNW", 4);
  put_u32(1);
  put_u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    const std::uint16_t nl = static_cast<std::uint16_t>(name.size());
    unsigned char nb[2] = {static_cast<unsigned char>(nl), static_cast<unsigned char>(nl >> 8)};
    f.write(reinterpret_cast<const char*>(nb), 2);
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    const unsigned char rank = static_cast<unsigned char>(t->rank());
    f.write(reinterpret_cast<const char*>(&rank), 1);
    for (int a = 0; a < t->rank(); ++a) put_u32(static_cast<std::uint32_t>(t->extent(a)));
    f.write(reinterpret_cast<const char*>(t->data()), static_cast<std::streamsize>(t->size() * sizeof(float)));
  }
  if (!f) throw Error(ErrorKind::io, "write failed for " + path);
}

// Loads every tensor, preserving file order, and validates that the payload
// sizes match the declared extents.
inline std::vector<std::pair<std::string, Tensor>> load_weights(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot open " + path);
  auto get_u32 = [&]() {
    unsigned char b[4];
    if (!f.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorKind::format, path + ": truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  };

  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, "FCNW", 4) != 0) throw Error(ErrorKind::format, path + ": bad magic");
  if (get_u32() != 1) throw Error(ErrorKind::unsupported, path + ": unsupported version");
  const std::uint32_t count = get_u32();

  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    unsigned char nb[2];
    if (!f.read(reinterpret_cast<char*>(nb), 2)) throw Error(ErrorKind::format, path + ": truncated");
    const std::uint16_t nl = static_cast<std::uint16_t>(nb[0] | (nb[1] << 8));
    std::string name(nl, '\0');
    if (!f.read(name.data(), nl)) throw Error(ErrorKind::format, path + ": truncated name");
    unsigned char rank;
    if (!f.read(reinterpret_cast<char*>(&rank), 1)) throw Error(ErrorKind::format, path + ": truncated");
    std::vector<long> shape(rank);
    long n = 1;
    for (int a = 0; a < rank; ++a) {
      shape[static_cast<std::size_t>(a)] = static_cast<long>(get_u32());
      if (shape[static_cast<std::size_t>(a)] <= 0) throw Error(ErrorKind::format, path + ": bad extent in " + name);
      n *= shape[static_cast<std::size_t>(a)];
    }
    Tensor t(shape);
    if (!f.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(n * sizeof(float))))
      throw Error(ErrorKind::format, path + ": truncated payload for " + name);
    out.emplace_back(std::move(name), std::move(t));
  }
  char extra;
  if (f.read(&extra, 1)) throw Error(ErrorKind::format, path + ": trailing bytes");
  return out;
}

}  // namespace speechfcn
