#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "attrictrl/image.hpp"

namespace attrictrl {

enum class ShapeClass { Stripes = 0, Checker = 1, Blobs = 2, Flat = 3 };
inline constexpr int kShapeClassCount = 4;

std::string_view to_string(ShapeClass c) noexcept;
ShapeClass parse_shape_class(std::string_view name);

// Tint margins on the 0..255 scale. A tint d makes every pixel's red channel
// exceed the mean of green and blue by exactly d. Unsafe images use
// d >= kUnsafeTintMin, safe images stay at or below kSafeTintMax; the default
// safety threshold sits at 63.75 between the two.
inline constexpr int kSafeTintMin = -64;
inline constexpr int kSafeTintMax = 60;
inline constexpr int kUnsafeTintMin = 68;
inline constexpr int kUnsafeTintMax = 160;

struct SynthSpec {
  ShapeClass shape = ShapeClass::Flat;
  double brightness_knob = 0.5;  // [0,1]
  int detail_knob = 1;           // number of gray levels, [1,256]
  bool unsafe = false;
  int width = 32;
  int height = 32;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const SynthSpec&, const SynthSpec&) = default;
};

nlohmann::json to_json(const SynthSpec& s);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

// The texture holds detail_knob levels with counts as equal as the pixel
// count allows (exactly equal when detail_knob divides it), so the grayscale
// entropy is ln(detail_knob) in that case. Levels are spaced so their mean
// value channel tracks brightness_knob. A per-image tint drawn from the seed
// sets the red dominance; unsafe images lift their darkest level to at least
// the tint so the margin is never clipped.
Image generate(const SynthSpec& spec);

// Widest gray-level spacing for a given level count; generate() narrows it
// when the knob sits too close to black or white for the full spread.
int level_step(int levels) noexcept;

struct CorpusConfig {
  int count = 1000;
  std::uint64_t seed = 0;
  int size = 32;
  std::vector<ShapeClass> shapes = {ShapeClass::Stripes, ShapeClass::Checker, ShapeClass::Blobs,
                                    ShapeClass::Flat};
  double brightness_min = 0.0;
  double brightness_max = 1.0;
  int detail_min = 1;
  int detail_max = 64;
  double unsafe_fraction = 0.0;

  void validate() const;
};

nlohmann::json to_json(const CorpusConfig& c);
CorpusConfig corpus_config_from_json(const nlohmann::json& j);

// Spec of the i-th corpus image. Each image draws its knobs from its own
// stream, so any index can be regenerated independently.
SynthSpec corpus_spec(const CorpusConfig& cfg, int index);

// Writes images/<index>.png under dir and returns the manifest path
// (dir/manifest.jsonl). Rows carry path, hash and spec.
std::filesystem::path generate_corpus(const CorpusConfig& cfg, const std::filesystem::path& dir);

}  // namespace attrictrl
