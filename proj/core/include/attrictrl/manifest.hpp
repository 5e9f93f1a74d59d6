#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "attrictrl/metrics.hpp"

namespace attrictrl {

inline constexpr int kManifestFormatVersion = 1;

// One JSONL line per image. path is relative to the manifest's directory.
struct ManifestRow {
  std::string path;
  std::string hash;  // SHA-256 of the file bytes
  std::optional<nlohmann::json> spec;
  std::map<AttributeKind, double> raw;
  std::map<AttributeKind, double> normalized;
  std::map<AttributeKind, std::size_t> bins;
};

struct Manifest {
  std::vector<ManifestRow> rows;
};

nlohmann::json to_json(const ManifestRow& row);
ManifestRow manifest_row_from_json(const nlohmann::json& j);

std::string serialize_manifest(const Manifest& m);
// Throws DecodeError naming the line for malformed JSON or missing fields.
Manifest parse_manifest(std::string_view text);

void write_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& path);

// Re-hashes every referenced file; throws IoError on the first mismatch.
void verify_manifest(const Manifest& m, const std::filesystem::path& base_dir);

}  // namespace attrictrl
