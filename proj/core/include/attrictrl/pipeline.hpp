#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "attrictrl/checkpoint.hpp"
#include "attrictrl/eval.hpp"
#include "attrictrl/manifest.hpp"
#include "attrictrl/report.hpp"
#include "attrictrl/synth.hpp"

namespace attrictrl {

struct EmbedderConfig {
  std::size_t dimension = SyntheticEmbedder::kDefaultDimension;
  std::uint64_t seed = SyntheticEmbedder::kDefaultSeed;
  double threshold = SafetyConcept::kDefaultThreshold;
  std::string positive_prompt = std::string(RealismPrompts::kPositive);
  std::string negative_prompt = std::string(RealismPrompts::kNegative);
};

struct MappingConfig {
  std::size_t bin_count = 10;
  std::size_t per_bin = 500;
};

struct ScheduleConfig {
  int steps = NoiseSchedule::kDefaultSteps;
  double beta_start = NoiseSchedule::kDefaultBetaStart;
  double beta_end = NoiseSchedule::kDefaultBetaEnd;

  NoiseSchedule build() const { return NoiseSchedule::linear(steps, beta_start, beta_end); }
};

struct GenerateConfig {
  int class_id = 0;
  std::map<AttributeKind, double> intensities;  // missing attributes default to 0.5
  int count = 4;
};

// Everything a pipeline run needs. One master seed feeds every stage; the
// stages separate their randomness through named streams. Outputs live under
// `workdir` in a fixed layout:
//
//   corpus/   images/, manifest.jsonl, scored.jsonl, embeddings.bin
//   tables/   <attribute>.json, training.jsonl
//   model/    checkpoint.bin, losses.csv
//   generated/ images/, manifest.jsonl
//   reports/  sweep.{csv,json,svg}, safety.json
//
// Each stage also writes <stage>.config.json, the resolved configuration,
// into its output directory.
struct PipelineConfig {
  std::filesystem::path workdir = "attrictrl-run";
  std::uint64_t seed = 0;
  std::vector<AttributeKind> attributes = {AttributeKind::Brightness};
  CorpusConfig corpus;
  EmbedderConfig embedder;
  MappingConfig mapping;
  ModelConfig model;  // attributes mirror the list above
  ScheduleConfig schedule;
  TrainConfig train;
  int log_every = 0;
  SweepConfig sweep;
  std::vector<AttributeKind> sweep_attributes;  // empty: every conditioned attribute
  std::vector<ReportFormat> report_formats = {ReportFormat::Csv, ReportFormat::Json, ReportFormat::Svg};
  GenerateConfig generate;
  int safety_samples = 200;

  void validate() const;
};

nlohmann::json default_config_json();
nlohmann::json to_json(const PipelineConfig& cfg);
// Merges j over the defaults (RFC 7386 merge patch) and validates.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

// Applies "dotted.key=value". The value is parsed as JSON when possible and
// taken as a string otherwise. Throws ConfigError on a malformed override.
void apply_override(nlohmann::json& j, std::string_view assignment);

struct Layout {
  std::filesystem::path root;
  std::filesystem::path corpus_dir() const { return root / "corpus"; }
  std::filesystem::path corpus_manifest() const { return corpus_dir() / "manifest.jsonl"; }
  std::filesystem::path scored_manifest() const { return corpus_dir() / "scored.jsonl"; }
  std::filesystem::path embedding_cache() const { return corpus_dir() / "embeddings.bin"; }
  std::filesystem::path tables_dir() const { return root / "tables"; }
  std::filesystem::path table(AttributeKind kind) const {
    return tables_dir() / (std::string(to_string(kind)) + ".json");
  }
  std::filesystem::path training_manifest() const { return tables_dir() / "training.jsonl"; }
  std::filesystem::path model_dir() const { return root / "model"; }
  std::filesystem::path checkpoint() const { return model_dir() / "checkpoint.bin"; }
  std::filesystem::path generated_dir() const { return root / "generated"; }
  std::filesystem::path reports_dir() const { return root / "reports"; }
};

struct ScoringResources {
  SyntheticEmbedder embedder;
  SafetyConcept safety_concept;
  RealismPrompts prompts;

  explicit ScoringResources(const EmbedderConfig& cfg);
  ScoringContext context() const { return {&embedder, prompts, &safety_concept}; }
};

// Builds the balanced training rows for the given attributes: per attribute,
// equal-width bins over all scored rows, balance(), and a mapping table from
// the balanced raw values. Training rows are the union of every attribute's
// balanced selection; each row is labeled for every attribute through that
// attribute's table.
struct MappingOutput {
  std::map<AttributeKind, MappingTable> tables;
  Manifest training;
};
MappingOutput build_training_data(const Manifest& scored, std::string_view scored_hash,
                                  const std::vector<AttributeKind>& attributes, const MappingConfig& cfg,
                                  std::uint64_t seed, const std::filesystem::path& path_prefix);

TrainingSet load_training_set(const Manifest& m, const std::filesystem::path& base_dir, const ModelConfig& model);

using StepCallback = std::function<void(long step, double loss)>;

void run_synth(const PipelineConfig& cfg);
void run_score(const PipelineConfig& cfg);
void run_map(const PipelineConfig& cfg);
Checkpoint run_train(const PipelineConfig& cfg, const StepCallback& on_step = {});
void run_generate(const PipelineConfig& cfg);
std::vector<SweepResult> run_sweep_stage(const PipelineConfig& cfg);
// Writes reports/safety.json (rr null when undefined) and then throws
// UndefinedRateError if no intensity-0 output was unsafe.
SafetyEvalResult run_safety_stage(const PipelineConfig& cfg);

}  // namespace attrictrl
