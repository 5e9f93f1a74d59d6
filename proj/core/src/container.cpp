#include "attrictrl/container.hpp"

#include <bit>
#include <cstring>

#include "attrictrl/error.hpp"
#include "attrictrl/io.hpp"

namespace attrictrl {

namespace {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

float get_f32(const std::uint8_t* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

}  // namespace

const TensorSection& Container::section(std::string_view name) const {
  for (const TensorSection& s : sections) {
    if (s.name == name) return s;
  }
  throw ConfigError("container has no section '" + std::string(name) + "'");
}

bool Container::has_section(std::string_view name) const noexcept {
  for (const TensorSection& s : sections) {
    if (s.name == name) return true;
  }
  return false;
}

std::vector<std::uint8_t> serialize_container(const Container& c) {
  if (c.magic.size() != kMagicSize) throw ContractError("container magic must be 16 bytes");
  nlohmann::json header;
  header["format_version"] = kContainerFormatVersion;
  header["meta"] = c.meta;
  header["sections"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const TensorSection& s : c.sections) {
    if (s.data.size() != s.rows * s.cols) {
      throw ContractError("section '" + s.name + "' size does not match its shape");
    }
    header["sections"].push_back(
        {{"name", s.name}, {"rows", s.rows}, {"cols", s.cols}, {"offset", offset}, {"count", s.data.size()}});
    offset += 4 * s.data.size();
  }
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(c.magic.begin(), c.magic.end());
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + offset);
  for (const TensorSection& s : c.sections) {
    for (float f : s.data) put_f32(out, f);
  }
  return out;
}

Container parse_container(std::span<const std::uint8_t> bytes, std::string_view expected_magic) {
  if (bytes.size() < kMagicSize + 8) throw DecodeError("container truncated in preamble", bytes.size());
  Container c;
  c.magic.assign(bytes.begin(), bytes.begin() + kMagicSize);
  if (c.magic != expected_magic) {
    throw ConfigError("unexpected container magic '" + c.magic + "', expected '" +
                      std::string(expected_magic) + "'");
  }
  const std::uint64_t header_len = get_u64(bytes.data() + kMagicSize);
  const std::size_t header_start = kMagicSize + 8;
  if (header_len > bytes.size() - header_start) {
    throw DecodeError("container truncated in header", bytes.size());
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + header_start,
                                   bytes.begin() + header_start + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("container header is not valid JSON: ") + e.what(), header_start);
  }
  if (header.value("format_version", 0) != kContainerFormatVersion) {
    throw ConfigError("unsupported container format_version " + header.value("format_version", nlohmann::json()).dump());
  }
  c.meta = header.value("meta", nlohmann::json::object());

  const std::size_t blob_start = header_start + header_len;
  const std::size_t blob_size = bytes.size() - blob_start;
  for (const auto& entry : header.at("sections")) {
    TensorSection s;
    s.name = entry.at("name").get<std::string>();
    s.rows = entry.at("rows").get<std::size_t>();
    s.cols = entry.at("cols").get<std::size_t>();
    const auto offset = entry.at("offset").get<std::uint64_t>();
    const auto count = entry.at("count").get<std::uint64_t>();
    if (count != s.rows * s.cols) throw DecodeError("section '" + s.name + "' count/shape mismatch", header_start);
    if (offset > blob_size || 4 * count > blob_size - offset) {
      throw DecodeError("section '" + s.name + "' runs past end of file", blob_start + offset);
    }
    s.data.resize(count);
    const std::uint8_t* p = bytes.data() + blob_start + offset;
    for (std::size_t i = 0; i < count; ++i) s.data[i] = get_f32(p + 4 * i);
    c.sections.push_back(std::move(s));
  }
  return c;
}

void write_container(const std::filesystem::path& path, const Container& c) {
  write_file_atomic(path, serialize_container(c));
}

Container read_container(const std::filesystem::path& path, std::string_view expected_magic) {
  return parse_container(read_file(path), expected_magic);
}

}  // namespace attrictrl
