#include "attrictrl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <string>

#include "attrictrl/error.hpp"
#include "attrictrl/hash.hpp"
#include "attrictrl/io.hpp"
#include "attrictrl/manifest.hpp"
#include "attrictrl/png_io.hpp"
#include "attrictrl/rng.hpp"

namespace attrictrl {

namespace {

constexpr std::array<std::string_view, kShapeClassCount> kShapeNames = {"stripes", "checker", "blobs", "flat"};

// Scalar field whose rank order decides which pixels receive which level.
std::vector<double> texture_field(const SynthSpec& s, Rng& rng) {
  const int w = s.width, h = s.height;
  std::vector<double> f(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  auto at = [&](int x, int y) -> double& { return f[static_cast<std::size_t>(y) * w + x]; };
  switch (s.shape) {
    case ShapeClass::Stripes: {
      const double angle = static_cast<double>(rng.below(4)) * std::numbers::pi / 4.0;
      const double period = rng.uniform(5.0, 11.0);
      const double phase = rng.uniform();
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double u = (x * std::cos(angle) + y * std::sin(angle)) / period + phase;
          at(x, y) = u - std::floor(u);
        }
      }
      break;
    }
    case ShapeClass::Checker: {
      const int cell = 4 << rng.below(2);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const int parity = ((x / cell) + (y / cell)) % 2;
          at(x, y) = parity + 0.9 * ((x % cell) + (y % cell)) / (2.0 * cell);
        }
      }
      break;
    }
    case ShapeClass::Blobs: {
      struct Bump {
        double cx, cy, inv_two_var, weight;
      };
      std::vector<Bump> bumps;
      for (int i = 0; i < 4; ++i) {
        const double sigma = rng.uniform(0.12, 0.3) * w;
        bumps.push_back({rng.uniform(0.0, w), rng.uniform(0.0, h), 1.0 / (2.0 * sigma * sigma),
                         rng.uniform() < 0.5 ? -1.0 : 1.0});
      }
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          double v = 0.0;
          for (const Bump& b : bumps) {
            const double dx = x - b.cx, dy = y - b.cy;
            v += b.weight * std::exp(-(dx * dx + dy * dy) * b.inv_two_var);
          }
          at(x, y) = v;
        }
      }
      break;
    }
    case ShapeClass::Flat:
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) at(x, y) = static_cast<double>(y) * w + x;
      }
      break;
  }
  return f;
}

int draw_tint(bool unsafe, Rng& rng) {
  const int lo = unsafe ? kUnsafeTintMin : kSafeTintMin;
  const int hi = unsafe ? kUnsafeTintMax : kSafeTintMax;
  return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

}  // namespace

std::string_view to_string(ShapeClass c) noexcept { return kShapeNames[static_cast<std::size_t>(c)]; }

ShapeClass parse_shape_class(std::string_view name) {
  for (std::size_t i = 0; i < kShapeNames.size(); ++i) {
    if (kShapeNames[i] == name) return static_cast<ShapeClass>(i);
  }
  throw ConfigError("unknown shape class '" + std::string(name) + "'");
}

void SynthSpec::validate() const {
  if (!(brightness_knob >= 0.0 && brightness_knob <= 1.0)) throw ContractError("brightness_knob must be in [0,1]");
  if (detail_knob < 1 || detail_knob > 256) throw ContractError("detail_knob must be in [1,256]");
  if (width < 8 || height < 8) throw ContractError("synthetic images must be at least 8x8");
  if (static_cast<long>(width) * height < detail_knob) throw ContractError("more gray levels than pixels");
  if (unsafe && level_step(detail_knob) * (detail_knob - 1) > 255 - kUnsafeTintMax) {
    throw ContractError("unsafe images support at most " + std::to_string(256 - kUnsafeTintMax) + " gray levels");
  }
  const int s = static_cast<int>(shape);
  if (s < 0 || s >= kShapeClassCount) throw ContractError("invalid shape class");
}

nlohmann::json to_json(const SynthSpec& s) {
  return {{"shape", std::string(to_string(s.shape))},
          {"brightness_knob", s.brightness_knob},
          {"detail_knob", s.detail_knob},
          {"unsafe", s.unsafe},
          {"width", s.width},
          {"height", s.height},
          {"seed", s.seed}};
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec s;
  s.shape = parse_shape_class(j.value("shape", std::string("flat")));
  s.brightness_knob = j.value("brightness_knob", s.brightness_knob);
  s.detail_knob = j.value("detail_knob", s.detail_knob);
  s.unsafe = j.value("unsafe", s.unsafe);
  s.width = j.value("width", s.width);
  s.height = j.value("height", s.height);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

int level_step(int levels) noexcept {
  if (levels <= 1) return 0;
  return std::clamp(64 / (levels - 1), 1, 16);
}

Image generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng = Rng::stream(spec.seed, "synth");
  const int tint = draw_tint(spec.unsafe, rng);
  const std::vector<double> field = texture_field(spec, rng);

  const int k = spec.detail_knob;
  // Near either end of the range the levels are packed tighter, so the mean
  // can still reach the knob.
  const double target = spec.brightness_knob * 255.0;
  int step = level_step(k);
  if (k > 1) {
    const int room = static_cast<int>(std::floor(2.0 * std::min(target, 255.0 - target) / (k - 1)));
    step = std::clamp(room, 1, step);
  }
  const int span = step * (k - 1);
  int lo = static_cast<int>(std::lround(target - span / 2.0));
  lo = std::clamp(lo, 0, 255 - span);
  // Safe images shrink their tint to fit; unsafe images are lifted instead so
  // the margin is kept.
  int d = tint;
  if (spec.unsafe) {
    lo = std::max(lo, d);
  } else {
    d = std::clamp(d, -lo, lo);
  }

  const std::size_t n = field.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return field[a] < field[b]; });

  std::vector<Rgb> px(n);
  for (std::size_t r = 0; r < n; ++r) {
    const int level_index = static_cast<int>(r * static_cast<std::size_t>(k) / n);
    const int v = lo + level_index * step;
    Rgb p;
    if (d >= 0) {
      p = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v - d), static_cast<std::uint8_t>(v - d)};
    } else {
      p = {static_cast<std::uint8_t>(v + d), static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v)};
    }
    px[order[r]] = p;
  }
  return Image(spec.width, spec.height, std::move(px));
}

void CorpusConfig::validate() const {
  if (count < 1) throw ConfigError("corpus count must be at least 1");
  if (size < 8) throw ConfigError("corpus image size must be at least 8");
  if (shapes.empty()) throw ConfigError("corpus needs at least one shape class");
  if (!(brightness_min >= 0.0 && brightness_min <= brightness_max && brightness_max <= 1.0)) {
    throw ConfigError("brightness range must satisfy 0 <= min <= max <= 1");
  }
  if (detail_min < 1 || detail_min > detail_max || detail_max > 256) {
    throw ConfigError("detail range must satisfy 1 <= min <= max <= 256");
  }
  if (!(unsafe_fraction >= 0.0 && unsafe_fraction <= 1.0)) throw ConfigError("unsafe_fraction must be in [0,1]");
}

nlohmann::json to_json(const CorpusConfig& c) {
  nlohmann::json shapes = nlohmann::json::array();
  for (ShapeClass s : c.shapes) shapes.push_back(std::string(to_string(s)));
  return {{"count", c.count},
          {"seed", c.seed},
          {"size", c.size},
          {"shapes", shapes},
          {"brightness_min", c.brightness_min},
          {"brightness_max", c.brightness_max},
          {"detail_min", c.detail_min},
          {"detail_max", c.detail_max},
          {"unsafe_fraction", c.unsafe_fraction}};
}

CorpusConfig corpus_config_from_json(const nlohmann::json& j) {
  CorpusConfig c;
  c.count = j.value("count", c.count);
  c.seed = j.value("seed", c.seed);
  c.size = j.value("size", c.size);
  if (j.contains("shapes")) {
    c.shapes.clear();
    for (const auto& s : j["shapes"]) c.shapes.push_back(parse_shape_class(s.get<std::string>()));
  }
  c.brightness_min = j.value("brightness_min", c.brightness_min);
  c.brightness_max = j.value("brightness_max", c.brightness_max);
  c.detail_min = j.value("detail_min", c.detail_min);
  c.detail_max = j.value("detail_max", c.detail_max);
  c.unsafe_fraction = j.value("unsafe_fraction", c.unsafe_fraction);
  c.validate();
  return c;
}

SynthSpec corpus_spec(const CorpusConfig& cfg, int index) {
  Rng rng = Rng::stream(mix_seed(cfg.seed, static_cast<std::uint64_t>(index)), "corpus");
  SynthSpec s;
  s.shape = cfg.shapes[rng.below(cfg.shapes.size())];
  s.brightness_knob = rng.uniform(cfg.brightness_min, cfg.brightness_max);
  s.detail_knob = cfg.detail_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.detail_max - cfg.detail_min + 1)));
  s.unsafe = rng.uniform() < cfg.unsafe_fraction;
  s.width = cfg.size;
  s.height = cfg.size;
  s.seed = rng();
  return s;
}

std::filesystem::path generate_corpus(const CorpusConfig& cfg, const std::filesystem::path& dir) {
  cfg.validate();
  Manifest manifest;
  for (int i = 0; i < cfg.count; ++i) {
    const SynthSpec spec = corpus_spec(cfg, i);
    const std::vector<std::uint8_t> png = encode_image(generate(spec));
    char name[32];
    std::snprintf(name, sizeof(name), "images/%06d.png", i);
    write_file_atomic(dir / name, png);
    ManifestRow row;
    row.path = name;
    row.hash = sha256_hex(png);
    row.spec = to_json(spec);
    manifest.rows.push_back(std::move(row));
  }
  const std::filesystem::path out = dir / "manifest.jsonl";
  write_manifest(out, manifest);
  return out;
}

}  // namespace attrictrl
