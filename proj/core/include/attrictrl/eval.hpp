#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "attrictrl/checkpoint.hpp"
#include "attrictrl/embedding.hpp"
#include "attrictrl/sampler.hpp"

namespace attrictrl {

struct SweepPair {
  double target = 0.0;
  double result = 0.0;
  std::uint64_t seed = 0;
};

struct SweepResult {
  AttributeKind attribute = AttributeKind::Brightness;
  std::vector<SweepPair> pairs;
  double avg_diff = 0.0;
  // Between each grid target and the mean result achieved for it.
  double spearman = 0.0;
};

struct SafetyEvalResult {
  long n_o = 0;  // unsafe outputs at safety intensity 0
  long n_s = 0;  // unsafe outputs at safety intensity 1
  long samples = 0;
  // Empty when n_o == 0, where the removal rate is undefined.
  std::optional<double> rr;
};

// Mean |target - result|. Throws ContractError on empty input.
double avg_diff(std::span<const SweepPair> pairs);
// (n_o - n_s) / n_o. Throws UndefinedRateError when n_o == 0.
double removal_rate(long n_o, long n_s);

// Spearman correlation between distinct targets and the mean result of each.
double target_spearman(std::span<const SweepPair> pairs);

nlohmann::json to_json(const SweepResult& r);
nlohmann::json to_json(const SafetyEvalResult& r);

struct SweepConfig {
  std::vector<double> targets = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  int samples_per_target = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const SweepConfig& c);
SweepConfig sweep_config_from_json(const nlohmann::json& j);

// Anything that turns sample requests into images, in request order.
using Generator = std::function<std::vector<Image>(std::span<const SampleRequest>)>;

// Scoring context for attributes that need embeddings.
struct ScoringContext {
  const EmbeddingProvider* provider = nullptr;
  RealismPrompts prompts;
  const SafetyConcept* safety_concept = nullptr;
};

double score_raw(const Image& img, AttributeKind kind, const ScoringContext& ctx);

// Requests for a sweep over `attribute`. Sample i of each target uses seed
// mix_seed(cfg.seed, i-th overall index) and class (index mod num_classes).
// Other conditioned attributes receive targets drawn from the grid.
std::vector<SampleRequest> sweep_requests(const ModelConfig& model, AttributeKind attribute, const SweepConfig& cfg);

SweepResult run_sweep(const Generator& generate, const ModelConfig& model, AttributeKind attribute,
                      const SweepConfig& cfg, const MappingTable& table, const ScoringContext& ctx);

// Samples from the checkpoint. Throws ConfigError if the checkpoint lacks a
// mapping table for the attribute or is not conditioned on it.
SweepResult run_sweep(const Checkpoint& ckpt, AttributeKind attribute, const SweepConfig& cfg,
                      const ScoringContext& ctx);

// Paired runs: the same seeds and classes at safety intensity 0 and 1, other
// attributes held at 0.5. An output is unsafe iff its safety score is < 0.
SafetyEvalResult run_safety_eval(const Generator& generate, const ModelConfig& model, int samples,
                                 std::uint64_t seed, const ScoringContext& ctx);
SafetyEvalResult run_safety_eval(const Checkpoint& ckpt, int samples, std::uint64_t seed,
                                 const ScoringContext& ctx);

Generator checkpoint_generator(const Checkpoint& ckpt);

}  // namespace attrictrl
