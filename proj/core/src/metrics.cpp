#include "attrictrl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "attrictrl/embedding.hpp"
#include "attrictrl/error.hpp"

namespace attrictrl {

std::string_view to_string(AttributeKind kind) noexcept {
  switch (kind) {
    case AttributeKind::Brightness: return "brightness";
    case AttributeKind::Detail: return "detail";
    case AttributeKind::Realism: return "realism";
    case AttributeKind::Safety: return "safety";
  }
  return "unknown";
}

AttributeKind parse_attribute(std::string_view name) {
  for (AttributeKind kind : kAllAttributes) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown attribute '" + std::string(name) + "'");
}

RawScore brightness(const Image& img) {
  std::uint64_t sum = 0;
  for (std::uint8_t v : value_channel(img)) sum += v;
  const double mean = static_cast<double>(sum) / static_cast<double>(img.size());
  return {AttributeKind::Brightness, mean / 255.0};
}

double histogram_entropy(const Histogram256& h) {
  const double total = static_cast<double>(h.total);
  double entropy = 0.0;
  for (std::uint64_t count : h.counts) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / total;
    entropy -= p * std::log(p);
  }
  // A single occupied level gives -1*log(1) = -0.0.
  return entropy == 0.0 ? 0.0 : entropy;
}

RawScore detail(const Image& img) {
  return {AttributeKind::Detail, histogram_entropy(histogram256(to_grayscale(img)))};
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ContractError("cosine_similarity: dimension mismatch (" + std::to_string(a.size()) +
                        " vs " + std::to_string(b.size()) + ")");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DomainError("cosine_similarity: zero vector");
  const double sim = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(sim, -1.0, 1.0);
}

double realism_from_embeddings(std::span<const double> image, std::span<const double> positive,
                               std::span<const double> negative) {
  return cosine_similarity(image, positive) - cosine_similarity(image, negative);
}

double safety_from_embedding(std::span<const double> image, const SafetyConcept& safety_concept) {
  return -(cosine_similarity(image, safety_concept.vector()) - safety_concept.threshold());
}

RawScore realism(const Image& img, const EmbeddingProvider& provider, const RealismPrompts& prompts) {
  const std::vector<double> e_img = provider.embed_image(img);
  const std::vector<double> e_pos = provider.embed_text(prompts.positive());
  const std::vector<double> e_neg = provider.embed_text(prompts.negative());
  return {AttributeKind::Realism, realism_from_embeddings(e_img, e_pos, e_neg)};
}

RawScore safety(const Image& img, const EmbeddingProvider& provider, const SafetyConcept& safety_concept) {
  return {AttributeKind::Safety, safety_from_embedding(provider.embed_image(img), safety_concept)};
}

ScoreMap score_all(const Image& img, const EmbeddingProvider& provider,
                   const RealismPrompts& prompts, const SafetyConcept& safety_concept) {
  return score_attributes(img, kAllAttributes, &provider, prompts, &safety_concept);
}

ScoreMap score_attributes(const Image& img, std::span<const AttributeKind> kinds,
                          const EmbeddingProvider* provider, const RealismPrompts& prompts,
                          const SafetyConcept* safety_concept) {
  ScoreMap out;
  std::vector<double> e_img;
  auto image_embedding = [&]() -> const std::vector<double>& {
    if (e_img.empty()) e_img = provider->embed_image(img);
    return e_img;
  };
  for (AttributeKind kind : kinds) {
    switch (kind) {
      case AttributeKind::Brightness:
        out.insert_or_assign(kind, brightness(img));
        break;
      case AttributeKind::Detail:
        out.insert_or_assign(kind, detail(img));
        break;
      case AttributeKind::Realism: {
        if (provider == nullptr) throw ConfigError("realism requires an embedding provider");
        const double value = realism_from_embeddings(image_embedding(),
                                                     provider->embed_text(prompts.positive()),
                                                     provider->embed_text(prompts.negative()));
        out.insert_or_assign(kind, RawScore{kind, value});
        break;
      }
      case AttributeKind::Safety: {
        if (provider == nullptr || safety_concept == nullptr) {
          throw ConfigError("safety requires an embedding provider and a safety concept");
        }
        out.insert_or_assign(kind, RawScore{kind, safety_from_embedding(image_embedding(), *safety_concept)});
        break;
      }
    }
  }
  return out;
}

}  // namespace attrictrl
