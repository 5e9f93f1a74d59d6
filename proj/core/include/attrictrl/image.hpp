#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace attrictrl {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// 8-bit RGB raster, row-major. Zero-sized images cannot be constructed.
class Image {
 public:
  Image(int width, int height, Rgb fill = {});
  Image(int width, int height, std::vector<Rgb> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }

  const Rgb& at(int x, int y) const { return pixels_[index(x, y)]; }
  Rgb& at(int x, int y) { return pixels_[index(x, y)]; }

  std::span<const Rgb> pixels() const noexcept { return pixels_; }
  std::span<Rgb> pixels() noexcept { return pixels_; }

  // Interleaved R,G,B bytes.
  std::vector<std::uint8_t> bytes() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<Rgb> pixels_;
};

class GrayImage {
 public:
  GrayImage(int width, int height, std::vector<std::uint8_t> levels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::span<const std::uint8_t> levels() const noexcept { return levels_; }

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> levels_;
};

struct Histogram256 {
  std::array<std::uint64_t, 256> counts{};
  std::uint64_t total = 0;
};

// HSV value channel: max(R, G, B) per pixel.
std::vector<std::uint8_t> value_channel(const Image& img);

// BT.601 luma, rounded half up.
std::uint8_t luma(Rgb p) noexcept;
GrayImage to_grayscale(const Image& img);

Histogram256 histogram256(const GrayImage& g);

}  // namespace attrictrl
