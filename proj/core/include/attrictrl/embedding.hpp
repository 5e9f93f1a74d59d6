#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "attrictrl/image.hpp"

namespace attrictrl {

// Maps images and text into a shared vector space. Implementations are
// immutable after construction and safe to call concurrently.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const noexcept = 0;
  virtual std::vector<double> embed_image(const Image& img) const = 0;
  virtual std::vector<double> embed_text(std::string_view text) const = 0;
};

// Unit-norm unsafe-concept direction plus the similarity threshold t.
class SafetyConcept {
 public:
  static constexpr double kDefaultThreshold = 0.25;

  // Normalizes the vector; throws on a zero vector or t outside (0,1).
  SafetyConcept(std::vector<double> vector, double threshold = kDefaultThreshold);

  const std::vector<double>& vector() const noexcept { return vector_; }
  double threshold() const noexcept { return threshold_; }

 private:
  std::vector<double> vector_;
  double threshold_;
};

class RealismPrompts {
 public:
  static constexpr std::string_view kPositive =
      "a real photograph, realistic details and natural lighting";
  static constexpr std::string_view kNegative =
      "a cartoon image, a human-created artistic representation, such as an illustration or painting";

  RealismPrompts() : RealismPrompts(std::string(kPositive), std::string(kNegative)) {}
  RealismPrompts(std::string positive, std::string negative);

  const std::string& positive() const noexcept { return positive_; }
  const std::string& negative() const noexcept { return negative_; }

 private:
  std::string positive_;
  std::string negative_;
};

// Summary statistics the synthetic embedder projects. All fractions are in
// [0,1] except red_dominance, which is in [-1,1].
struct ImageStats {
  double mean_r = 0, mean_g = 0, mean_b = 0;
  double mean_luma = 0;
  double entropy = 0;        // detail / ln 256
  double edge_density = 0;   // fraction of 4-neighbour pairs with differing luma
  double contrast = 0;       // luma standard deviation / 128
  double red_dominance = 0;  // mean(R - (G+B)/2) / 255
};

ImageStats image_stats(const Image& img);

// Deterministic stand-in for a vision-language encoder. An image embeds as
// Q [sqrt(1 - r^2) u ; r], where u is the unit vector of the remaining
// statistics, r is the red dominance and Q has orthonormal columns drawn from
// the seed. Cosine similarity to unsafe_concept() is therefore exactly r.
// Text embeds through keyword weights on the same statistic axes plus a
// hashed component orthogonal to them.
class SyntheticEmbedder final : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDefaultDimension = 64;
  static constexpr std::uint64_t kDefaultSeed = 0x5eed;
  static constexpr std::size_t kStatAxes = 10;

  explicit SyntheticEmbedder(std::size_t dimension = kDefaultDimension,
                             std::uint64_t seed = kDefaultSeed);

  std::size_t dimension() const noexcept override { return dimension_; }
  std::vector<double> embed_image(const Image& img) const override;
  std::vector<double> embed_text(std::string_view text) const override;

  std::vector<double> embed_stats(const ImageStats& stats) const;
  std::vector<double> unsafe_concept() const;
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::vector<double> project(const std::vector<double>& coords) const;

  std::size_t dimension_;
  std::uint64_t seed_;
  std::vector<double> basis_;  // dimension_ x kStatAxes, column-major
};

// Key under which an image is stored in an embedding cache: SHA-256 over the
// dimensions and raw RGB bytes.
std::string image_content_hash(const Image& img);

// Precomputed embeddings loaded from an embedding-cache container. Lookups of
// unknown keys throw ConfigError.
class FileEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit FileEmbeddingProvider(const std::filesystem::path& path);
  FileEmbeddingProvider(std::size_t dimension, std::map<std::string, std::vector<double>> images,
                        std::map<std::string, std::vector<double>> texts);

  std::size_t dimension() const noexcept override { return dimension_; }
  std::vector<double> embed_image(const Image& img) const override;
  std::vector<double> embed_text(std::string_view text) const override;

  const std::map<std::string, std::vector<double>>& images() const noexcept { return images_; }
  const std::map<std::string, std::vector<double>>& texts() const noexcept { return texts_; }

 private:
  void validate() const;

  std::size_t dimension_ = 0;
  std::map<std::string, std::vector<double>> images_;  // image_content_hash -> vector
  std::map<std::string, std::vector<double>> texts_;   // sha256(text) -> vector
};

void write_embedding_cache(const std::filesystem::path& path, std::size_t dimension,
                           const std::map<std::string, std::vector<double>>& images,
                           const std::map<std::string, std::vector<double>>& texts);

}  // namespace attrictrl
