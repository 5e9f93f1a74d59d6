#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace attrictrl {

// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

// 64-bit FNV-1a, used to derive RNG stream seeds from names.
constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace attrictrl
