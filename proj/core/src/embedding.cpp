#include "attrictrl/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "attrictrl/container.hpp"
#include "attrictrl/error.hpp"
#include "attrictrl/hash.hpp"
#include "attrictrl/metrics.hpp"
#include "attrictrl/rng.hpp"

namespace attrictrl {

namespace {

// Coordinates along the orthonormal statistic axes.
enum Axis : std::size_t {
  kBias = 0,
  kMeanR,
  kMeanG,
  kMeanB,
  kLuma,
  kEntropy,
  kEdges,
  kFlatness,
  kContrast,
  kRedDominance,
};

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

struct Keyword {
  std::string_view token;
  std::array<std::pair<Axis, double>, 3> weights;
};

constexpr std::pair<Axis, double> kNone{kBias, 0.0};

constexpr Keyword kKeywords[] = {
    {"photo", {{{kEdges, 1.0}, {kEntropy, 1.0}, {kContrast, 0.5}}}},
    {"real", {{{kEdges, 1.0}, {kEntropy, 1.0}, {kContrast, 0.5}}}},
    {"natural", {{{kEdges, 1.0}, {kEntropy, 1.0}, {kContrast, 0.5}}}},
    {"detail", {{{kEdges, 1.0}, {kEntropy, 1.0}, {kContrast, 0.5}}}},
    {"cartoon", {{{kFlatness, 1.0}, {kBias, 0.3}, kNone}}},
    {"illustration", {{{kFlatness, 1.0}, {kBias, 0.3}, kNone}}},
    {"painting", {{{kFlatness, 1.0}, {kBias, 0.3}, kNone}}},
    {"artistic", {{{kFlatness, 1.0}, {kBias, 0.3}, kNone}}},
    {"drawing", {{{kFlatness, 1.0}, {kBias, 0.3}, kNone}}},
    {"bright", {{{kLuma, 1.0}, kNone, kNone}}},
    {"dark", {{{kLuma, -1.0}, kNone, kNone}}},
    {"red", {{{kMeanR, 1.0}, kNone, kNone}}},
    {"unsafe", {{{kRedDominance, 1.0}, kNone, kNone}}},
};

}  // namespace

SafetyConcept::SafetyConcept(std::vector<double> vector, double threshold)
    : vector_(std::move(vector)), threshold_(threshold) {
  if (!(threshold_ > 0.0 && threshold_ < 1.0)) {
    throw ConfigError("safety threshold must lie strictly between 0 and 1");
  }
  const double n = norm(vector_);
  if (n == 0.0 || !std::isfinite(n)) throw DomainError("safety concept vector must be non-zero");
  for (double& x : vector_) x /= n;
}

RealismPrompts::RealismPrompts(std::string positive, std::string negative)
    : positive_(std::move(positive)), negative_(std::move(negative)) {
  if (positive_.empty() || negative_.empty()) throw ConfigError("realism prompts must be non-empty");
}

ImageStats image_stats(const Image& img) {
  ImageStats s;
  const double n = static_cast<double>(img.size());
  double sum_r = 0, sum_g = 0, sum_b = 0, sum_dom = 0;
  for (const Rgb& p : img.pixels()) {
    sum_r += p.r;
    sum_g += p.g;
    sum_b += p.b;
    sum_dom += p.r - 0.5 * (p.g + p.b);
  }
  s.mean_r = sum_r / (255.0 * n);
  s.mean_g = sum_g / (255.0 * n);
  s.mean_b = sum_b / (255.0 * n);
  s.red_dominance = std::clamp(sum_dom / (255.0 * n), -1.0, 1.0);

  const GrayImage gray = to_grayscale(img);
  const auto levels = gray.levels();
  double sum_l = 0, sum_l2 = 0;
  for (std::uint8_t l : levels) {
    sum_l += l;
    sum_l2 += static_cast<double>(l) * l;
  }
  const double mean_l = sum_l / n;
  s.mean_luma = mean_l / 255.0;
  s.contrast = std::sqrt(std::max(0.0, sum_l2 / n - mean_l * mean_l)) / 128.0;
  s.entropy = histogram_entropy(histogram256(gray)) / std::log(256.0);

  std::size_t pairs = 0, edges = 0;
  const int w = gray.width(), h = gray.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint8_t c = levels[static_cast<std::size_t>(y) * w + x];
      if (x + 1 < w) {
        ++pairs;
        edges += c != levels[static_cast<std::size_t>(y) * w + x + 1];
      }
      if (y + 1 < h) {
        ++pairs;
        edges += c != levels[static_cast<std::size_t>(y + 1) * w + x];
      }
    }
  }
  s.edge_density = pairs == 0 ? 0.0 : static_cast<double>(edges) / static_cast<double>(pairs);
  return s;
}

SyntheticEmbedder::SyntheticEmbedder(std::size_t dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed), basis_(dimension * kStatAxes) {
  if (dimension_ < 2 * kStatAxes) {
    throw ConfigError("synthetic embedder dimension must be at least " + std::to_string(2 * kStatAxes));
  }
  // Modified Gram-Schmidt on seeded Gaussian columns.
  Rng rng = Rng::stream(seed, "embedder-basis");
  for (double& x : basis_) x = rng.normal();
  for (std::size_t j = 0; j < kStatAxes; ++j) {
    double* col = &basis_[j * dimension_];
    for (std::size_t k = 0; k < j; ++k) {
      const double* prev = &basis_[k * dimension_];
      double dot = 0.0;
      for (std::size_t i = 0; i < dimension_; ++i) dot += col[i] * prev[i];
      for (std::size_t i = 0; i < dimension_; ++i) col[i] -= dot * prev[i];
    }
    double n = 0.0;
    for (std::size_t i = 0; i < dimension_; ++i) n += col[i] * col[i];
    n = std::sqrt(n);
    for (std::size_t i = 0; i < dimension_; ++i) col[i] /= n;
  }
}

std::vector<double> SyntheticEmbedder::project(const std::vector<double>& coords) const {
  std::vector<double> out(dimension_, 0.0);
  for (std::size_t j = 0; j < kStatAxes; ++j) {
    const double* col = &basis_[j * dimension_];
    for (std::size_t i = 0; i < dimension_; ++i) out[i] += coords[j] * col[i];
  }
  return out;
}

std::vector<double> SyntheticEmbedder::embed_stats(const ImageStats& s) const {
  std::vector<double> coords(kStatAxes, 0.0);
  coords[kBias] = 1.0;
  coords[kMeanR] = s.mean_r;
  coords[kMeanG] = s.mean_g;
  coords[kMeanB] = s.mean_b;
  coords[kLuma] = s.mean_luma;
  coords[kEntropy] = s.entropy;
  coords[kEdges] = s.edge_density;
  coords[kFlatness] = 1.0 - s.edge_density;
  coords[kContrast] = s.contrast;
  double rest = 0.0;
  for (std::size_t j = 0; j < kRedDominance; ++j) rest += coords[j] * coords[j];
  const double r = s.red_dominance;
  const double scale = std::sqrt(std::max(0.0, 1.0 - r * r)) / std::sqrt(rest);
  for (std::size_t j = 0; j < kRedDominance; ++j) coords[j] *= scale;
  coords[kRedDominance] = r;
  return project(coords);
}

std::vector<double> SyntheticEmbedder::embed_image(const Image& img) const {
  return embed_stats(image_stats(img));
}

std::vector<double> SyntheticEmbedder::embed_text(std::string_view text) const {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::vector<double> coords(kStatAxes, 0.0);
  for (const Keyword& kw : kKeywords) {
    if (lower.find(kw.token) == std::string::npos) continue;
    for (const auto& [axis, weight] : kw.weights) coords[axis] += weight;
  }
  std::vector<double> out = project(coords);

  // Text-specific component orthogonal to every statistic axis.
  Rng rng(mix_seed(seed_, fnv1a64(text)));
  std::vector<double> residual(dimension_);
  for (double& x : residual) x = rng.normal();
  for (std::size_t j = 0; j < kStatAxes; ++j) {
    const double* col = &basis_[j * dimension_];
    double dot = 0.0;
    for (std::size_t i = 0; i < dimension_; ++i) dot += residual[i] * col[i];
    for (std::size_t i = 0; i < dimension_; ++i) residual[i] -= dot * col[i];
  }
  const double keyword_norm = norm(coords);
  const double scale = (keyword_norm > 0.0 ? 0.3 * keyword_norm : 1.0) / norm(residual);
  for (std::size_t i = 0; i < dimension_; ++i) out[i] += scale * residual[i];
  return out;
}

std::vector<double> SyntheticEmbedder::unsafe_concept() const {
  std::vector<double> coords(kStatAxes, 0.0);
  coords[kRedDominance] = 1.0;
  return project(coords);
}

std::string image_content_hash(const Image& img) {
  std::vector<std::uint8_t> bytes;
  const std::string dims = std::to_string(img.width()) + "x" + std::to_string(img.height()) + ":";
  bytes.assign(dims.begin(), dims.end());
  const std::vector<std::uint8_t> rgb = img.bytes();
  bytes.insert(bytes.end(), rgb.begin(), rgb.end());
  return sha256_hex(bytes);
}

FileEmbeddingProvider::FileEmbeddingProvider(const std::filesystem::path& path) {
  const Container c = read_container(path, kEmbeddingCacheMagic);
  dimension_ = c.meta.at("dimension").get<std::size_t>();
  for (const TensorSection& s : c.sections) {
    std::vector<double> v(s.data.begin(), s.data.end());
    if (s.name.rfind("image/", 0) == 0) {
      images_.emplace(s.name.substr(6), std::move(v));
    } else if (s.name.rfind("text/", 0) == 0) {
      texts_.emplace(s.name.substr(5), std::move(v));
    } else {
      throw ConfigError("embedding cache has unexpected section '" + s.name + "'");
    }
  }
  validate();
}

FileEmbeddingProvider::FileEmbeddingProvider(std::size_t dimension,
                                             std::map<std::string, std::vector<double>> images,
                                             std::map<std::string, std::vector<double>> texts)
    : dimension_(dimension), images_(std::move(images)), texts_(std::move(texts)) {
  validate();
}

void FileEmbeddingProvider::validate() const {
  if (dimension_ < 2) throw ConfigError("embedding dimension must be at least 2");
  auto check = [&](const auto& table) {
    for (const auto& [key, v] : table) {
      if (v.size() != dimension_) throw ConfigError("embedding '" + key + "' has wrong dimension");
      if (norm(v) == 0.0) throw ConfigError("embedding '" + key + "' is the zero vector");
    }
  };
  check(images_);
  check(texts_);
}

std::vector<double> FileEmbeddingProvider::embed_image(const Image& img) const {
  const std::string key = image_content_hash(img);
  const auto it = images_.find(key);
  if (it == images_.end()) throw ConfigError("no cached embedding for image " + key);
  return it->second;
}

std::vector<double> FileEmbeddingProvider::embed_text(std::string_view text) const {
  const auto it = texts_.find(sha256_hex(text));
  if (it == texts_.end()) throw ConfigError("no cached embedding for text '" + std::string(text) + "'");
  return it->second;
}

void write_embedding_cache(const std::filesystem::path& path, std::size_t dimension,
                           const std::map<std::string, std::vector<double>>& images,
                           const std::map<std::string, std::vector<double>>& texts) {
  Container c;
  c.magic = std::string(kEmbeddingCacheMagic);
  c.meta["dimension"] = dimension;
  c.meta["format_version"] = kContainerFormatVersion;
  auto add = [&](const std::string& prefix, const auto& table) {
    for (const auto& [key, v] : table) {
      if (v.size() != dimension) throw ContractError("embedding '" + key + "' has wrong dimension");
      c.sections.push_back({prefix + key, 1, dimension, std::vector<float>(v.begin(), v.end())});
    }
  };
  add("image/", images);
  add("text/", texts);
  write_container(path, c);
}

}  // namespace attrictrl
