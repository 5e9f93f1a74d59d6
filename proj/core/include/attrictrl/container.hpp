#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace attrictrl {

// Binary container shared by checkpoints and embedding caches:
//
//   16 bytes   magic
//   u64 LE     length of the JSON header in bytes
//   JSON       {"format_version": 1, "meta": {...},
//               "sections": [{"name", "rows", "cols", "offset", "count"}]}
//   blob       little-endian IEEE-754 float32 data, sections back to back;
//              "offset" is in bytes from the start of the blob.
inline constexpr std::size_t kMagicSize = 16;
inline constexpr int kContainerFormatVersion = 1;
inline constexpr std::string_view kCheckpointMagic = "ATTRICTRL-CKPT01";
inline constexpr std::string_view kEmbeddingCacheMagic = "ATTRICTRL-EMBC01";

struct TensorSection {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;
};

struct Container {
  std::string magic;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<TensorSection> sections;

  const TensorSection& section(std::string_view name) const;
  bool has_section(std::string_view name) const noexcept;
};

std::vector<std::uint8_t> serialize_container(const Container& c);
// Throws DecodeError on truncation or a malformed header and ConfigError when
// the magic or format version does not match.
Container parse_container(std::span<const std::uint8_t> bytes, std::string_view expected_magic);

void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path, std::string_view expected_magic);

}  // namespace attrictrl
