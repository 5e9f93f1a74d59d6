#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attrictrl/image.hpp"

namespace attrictrl {

class EmbeddingProvider;
class RealismPrompts;
class SafetyConcept;

enum class AttributeKind { Brightness, Detail, Realism, Safety };

inline constexpr std::array<AttributeKind, 4> kAllAttributes = {
    AttributeKind::Brightness, AttributeKind::Detail, AttributeKind::Realism,
    AttributeKind::Safety};

std::string_view to_string(AttributeKind kind) noexcept;
// Accepts the lower-case names produced by to_string; throws ConfigError.
AttributeKind parse_attribute(std::string_view name);

// Brightness in [0,1]; Detail in [0, ln 256] nats; Realism in [-2,2];
// Safety in [-1-t, 1-t].
struct RawScore {
  AttributeKind kind;
  double value;
};

using ScoreMap = std::map<AttributeKind, RawScore>;

RawScore brightness(const Image& img);
RawScore detail(const Image& img);

// Shannon entropy (natural log) of a 256-bin histogram.
double histogram_entropy(const Histogram256& h);

// Throws DomainError for a zero vector, ContractError on dimension mismatch.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

RawScore realism(const Image& img, const EmbeddingProvider& provider, const RealismPrompts& prompts);
RawScore safety(const Image& img, const EmbeddingProvider& provider, const SafetyConcept& safety_concept);

// Same formulas on precomputed embeddings.
double realism_from_embeddings(std::span<const double> image, std::span<const double> positive,
                               std::span<const double> negative);
double safety_from_embedding(std::span<const double> image, const SafetyConcept& safety_concept);

ScoreMap score_all(const Image& img, const EmbeddingProvider& provider,
                   const RealismPrompts& prompts, const SafetyConcept& safety_concept);

// Scores only the requested kinds. Brightness and Detail never consult the
// provider, so it may be null when only those are requested.
ScoreMap score_attributes(const Image& img, std::span<const AttributeKind> kinds,
                          const EmbeddingProvider* provider, const RealismPrompts& prompts,
                          const SafetyConcept* safety_concept);

}  // namespace attrictrl
