#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>

namespace dartk {

inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "binary payload I/O assumes a little-endian host");

inline std::string hex64(std::uint64_t v) {
  static const char* d = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = d[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace detail
}  // namespace dartk
