#include "attrictrl/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "attrictrl/error.hpp"

namespace attrictrl {

namespace {

void check_dims(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw ContractError("image dimensions must be positive, got " +
                        std::to_string(width) + "x" + std::to_string(height));
  }
}

}  // namespace

Image::Image(int width, int height, Rgb fill) : width_(width), height_(height) {
  check_dims(width, height);
  pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

Image::Image(int width, int height, std::vector<Rgb> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  check_dims(width, height);
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw ContractError("pixel count " + std::to_string(pixels_.size()) +
                        " does not match " + std::to_string(width) + "x" +
                        std::to_string(height));
  }
}

std::vector<std::uint8_t> Image::bytes() const {
  std::vector<std::uint8_t> out;
  out.reserve(pixels_.size() * 3);
  for (const Rgb& p : pixels_) {
    out.push_back(p.r);
    out.push_back(p.g);
    out.push_back(p.b);
  }
  return out;
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> levels)
    : width_(width), height_(height), levels_(std::move(levels)) {
  check_dims(width, height);
  if (levels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw ContractError("gray level count does not match image dimensions");
  }
}

std::vector<std::uint8_t> value_channel(const Image& img) {
  std::vector<std::uint8_t> v;
  v.reserve(img.size());
  for (const Rgb& p : img.pixels()) v.push_back(std::max({p.r, p.g, p.b}));
  return v;
}

std::uint8_t luma(Rgb p) noexcept {
  // Integer form of 0.299 R + 0.587 G + 0.114 B, exact in thousandths.
  const int scaled = 299 * p.r + 587 * p.g + 114 * p.b;
  const int level = (scaled + 500) / 1000;
  return static_cast<std::uint8_t>(std::clamp(level, 0, 255));
}

GrayImage to_grayscale(const Image& img) {
  std::vector<std::uint8_t> levels;
  levels.reserve(img.size());
  for (const Rgb& p : img.pixels()) levels.push_back(luma(p));
  return GrayImage(img.width(), img.height(), std::move(levels));
}

Histogram256 histogram256(const GrayImage& g) {
  Histogram256 h;
  for (std::uint8_t level : g.levels()) ++h.counts[level];
  h.total = g.levels().size();
  return h;
}

}  // namespace attrictrl
