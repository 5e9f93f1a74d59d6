#include "attrictrl/manifest.hpp"

#include <sstream>

#include "attrictrl/error.hpp"
#include "attrictrl/hash.hpp"
#include "attrictrl/io.hpp"

namespace attrictrl {

namespace {

template <typename V>
nlohmann::json attribute_object(const std::map<AttributeKind, V>& m) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [k, v] : m) out[std::string(to_string(k))] = v;
  return out;
}

template <typename V>
std::map<AttributeKind, V> attribute_map(const nlohmann::json& j) {
  std::map<AttributeKind, V> out;
  for (auto it = j.begin(); it != j.end(); ++it) out[parse_attribute(it.key())] = it.value().get<V>();
  return out;
}

}  // namespace

nlohmann::json to_json(const ManifestRow& row) {
  nlohmann::json j = {{"path", row.path}, {"hash", row.hash}};
  if (row.spec) j["spec"] = *row.spec;
  if (!row.raw.empty()) j["raw"] = attribute_object(row.raw);
  if (!row.normalized.empty()) j["normalized"] = attribute_object(row.normalized);
  if (!row.bins.empty()) j["bins"] = attribute_object(row.bins);
  return j;
}

ManifestRow manifest_row_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("path") || !j.contains("hash")) {
    throw ConfigError("manifest row needs 'path' and 'hash'");
  }
  ManifestRow row;
  row.path = j.at("path").get<std::string>();
  row.hash = j.at("hash").get<std::string>();
  if (j.contains("spec")) row.spec = j.at("spec");
  if (j.contains("raw")) row.raw = attribute_map<double>(j.at("raw"));
  if (j.contains("normalized")) row.normalized = attribute_map<double>(j.at("normalized"));
  if (j.contains("bins")) row.bins = attribute_map<std::size_t>(j.at("bins"));
  return row;
}

std::string serialize_manifest(const Manifest& m) {
  std::string out;
  for (const ManifestRow& row : m.rows) {
    out += to_json(row).dump();
    out += '\n';
  }
  return out;
}

Manifest parse_manifest(std::string_view text) {
  Manifest m;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const std::string_view line = text.substr(pos, end - pos);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      try {
        m.rows.push_back(manifest_row_from_json(nlohmann::json::parse(line)));
      } catch (const std::exception& e) {
        throw DecodeError("manifest line " + std::to_string(line_no) + ": " + e.what(), pos);
      }
    }
    pos = end + 1;
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  write_text_atomic(path, serialize_manifest(m));
}

Manifest read_manifest(const std::filesystem::path& path) {
  try {
    return parse_manifest(read_text(path));
  } catch (const DecodeError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void verify_manifest(const Manifest& m, const std::filesystem::path& base_dir) {
  for (const ManifestRow& row : m.rows) {
    const std::filesystem::path p = base_dir / row.path;
    if (sha256_hex(read_file(p)) != row.hash) throw IoError(p.string() + ": content hash does not match manifest");
  }
}

}  // namespace attrictrl
