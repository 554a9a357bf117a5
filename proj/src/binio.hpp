#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace icl::binio {

// float payloads are little-endian on disk regardless of host order

inline void write_f32(std::ostream& os, const float* data, size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * 4));
  } else {
    for (size_t i = 0; i < count; ++i) {
      uint32_t u;
      std::memcpy(&u, data + i, 4);
      char b[4] = {static_cast<char>(u), static_cast<char>(u >> 8),
                   static_cast<char>(u >> 16), static_cast<char>(u >> 24)};
      os.write(b, 4);
    }
  }
  if (!os) throw std::runtime_error("write_f32: stream failure");
}

inline std::vector<float> read_f32(std::istream& is, size_t count) {
  std::vector<float> out(count);
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(count * 4));
  } else {
    for (size_t i = 0; i < count; ++i) {
      unsigned char b[4];
      is.read(reinterpret_cast<char*>(b), 4);
      uint32_t u = static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
                   static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
      std::memcpy(&out[i], &u, 4);
    }
  }
  if (!is) throw std::runtime_error("read_f32: stream failure or truncated file");
  return out;
}

}  // namespace icl::binio
