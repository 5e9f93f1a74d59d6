#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "attrictrl/image.hpp"

namespace attrictrl {

// Decodes an 8-bit PNG (RGB, RGBA, gray, gray+alpha or palette). Alpha is
// dropped. Throws DecodeError on malformed input and UnsupportedFormatError
// for any bit depth other than 8 (palette images excepted).
Image decode_image(std::span<const std::uint8_t> bytes);

// Encodes as 8-bit RGB PNG. Output is a pure function of the pixels.
std::vector<std::uint8_t> encode_image(const Image& img);

Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);

}  // namespace attrictrl
