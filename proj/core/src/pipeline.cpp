#include "attrictrl/pipeline.hpp"

#include <cstdio>
#include <set>
#include <string>

#include "attrictrl/error.hpp"
#include "attrictrl/hash.hpp"
#include "attrictrl/io.hpp"
#include "attrictrl/png_io.hpp"

namespace attrictrl {

namespace {

nlohmann::json attribute_list(const std::vector<AttributeKind>& kinds) {
  nlohmann::json out = nlohmann::json::array();
  for (AttributeKind k : kinds) out.push_back(std::string(to_string(k)));
  return out;
}

std::vector<AttributeKind> parse_attribute_list(const nlohmann::json& j) {
  std::vector<AttributeKind> out;
  for (const auto& v : j) out.push_back(parse_attribute(v.get<std::string>()));
  return out;
}

// Rejects keys the defaults do not know about, so a typo in a config file
// fails loudly instead of being ignored. Empty default objects are free-form.
void check_known_keys(const nlohmann::json& user, const nlohmann::json& defaults, const std::string& where) {
  if (!user.is_object() || !defaults.is_object() || defaults.empty()) return;
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!defaults.contains(it.key())) throw ConfigError("unknown configuration key '" + key + "'");
    check_known_keys(it.value(), defaults.at(it.key()), key);
  }
}

void write_snapshot(const std::filesystem::path& dir, std::string_view stage, const PipelineConfig& cfg) {
  write_text_atomic(dir / (std::string(stage) + ".config.json"), to_json(cfg).dump(2) + "\n");
}

std::string file_hash(const std::filesystem::path& p) { return sha256_hex(read_file(p)); }

Image load_verified(const std::filesystem::path& path, const std::string& expected_hash) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  if (sha256_hex(bytes) != expected_hash) throw IoError(path.string() + ": content hash does not match manifest");
  try {
    return decode_image(bytes);
  } catch (const UnsupportedFormatError& e) {
    throw UnsupportedFormatError(path.string() + ": " + e.what());
  } catch (const DecodeError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

ModelConfig resolved_model(const PipelineConfig& cfg) {
  ModelConfig m = cfg.model;
  m.attributes = cfg.attributes;
  return m;
}

}  // namespace

void PipelineConfig::validate() const {
  if (workdir.empty()) throw ConfigError("workdir must not be empty");
  if (attributes.empty()) throw ConfigError("at least one attribute is required");
  corpus.validate();
  if (mapping.bin_count < 1 || mapping.per_bin < 1) throw ConfigError("bin_count and per_bin must be positive");
  resolved_model(*this).validate();
  if (model.denoiser.image_size != corpus.size) throw ConfigError("model image_size must equal corpus size");
  schedule.build();
  train.validate();
  sweep.validate();
  for (AttributeKind k : sweep_attributes) {
    if (std::find(attributes.begin(), attributes.end(), k) == attributes.end()) {
      throw ConfigError("sweep attribute '" + std::string(to_string(k)) + "' is not conditioned");
    }
  }
  if (report_formats.empty()) throw ConfigError("at least one report format is required");
  if (generate.count < 1) throw ConfigError("generate.count must be at least 1");
  if (generate.class_id < 0 || generate.class_id >= model.denoiser.num_classes) {
    throw ConfigError("generate.class out of range");
  }
  if (safety_samples < 1) throw ConfigError("safety_eval.samples must be at least 1");
  SafetyConcept probe({1.0}, embedder.threshold);
  (void)probe;
}

nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json corpus = to_json(c.corpus);
  corpus.erase("seed");
  nlohmann::json model = to_json(c.model);
  model.erase("attributes");
  nlohmann::json train = to_json(c.train);
  train.erase("seed");
  nlohmann::json intensities = nlohmann::json::object();
  for (const auto& [k, v] : c.generate.intensities) intensities[std::string(to_string(k))] = v;
  nlohmann::json formats = nlohmann::json::array();
  for (ReportFormat f : c.report_formats) formats.push_back(std::string(extension(f)));
  return {
      {"workdir", c.workdir.generic_string()},
      {"seed", c.seed},
      {"attributes", attribute_list(c.attributes)},
      {"corpus", corpus},
      {"embedder",
       {{"dimension", c.embedder.dimension},
        {"seed", c.embedder.seed},
        {"threshold", c.embedder.threshold},
        {"positive_prompt", c.embedder.positive_prompt},
        {"negative_prompt", c.embedder.negative_prompt}}},
      {"mapping", {{"bin_count", c.mapping.bin_count}, {"per_bin", c.mapping.per_bin}}},
      {"model", model},
      {"schedule",
       {{"steps", c.schedule.steps}, {"beta_start", c.schedule.beta_start}, {"beta_end", c.schedule.beta_end}}},
      {"train", train},
      {"log_every", c.log_every},
      {"sweep",
       {{"targets", c.sweep.targets},
        {"samples_per_target", c.sweep.samples_per_target},
        {"attributes", attribute_list(c.sweep_attributes)}}},
      {"reports", {{"formats", formats}}},
      {"generate", {{"class", c.generate.class_id}, {"intensities", intensities}, {"count", c.generate.count}}},
      {"safety_eval", {{"samples", c.safety_samples}}},
  };
}

nlohmann::json default_config_json() {
  PipelineConfig c;
  c.model.attributes = c.attributes;
  return to_json(c);
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& user) {
  if (!user.is_object()) throw ConfigError("configuration must be a JSON object");
  const nlohmann::json defaults = default_config_json();
  check_known_keys(user, defaults, "");
  nlohmann::json j = defaults;
  j.merge_patch(user);

  PipelineConfig c;
  try {
    c.workdir = j.at("workdir").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.attributes = parse_attribute_list(j.at("attributes"));

    nlohmann::json corpus = j.at("corpus");
    corpus["seed"] = c.seed;
    c.corpus = corpus_config_from_json(corpus);

    const auto& e = j.at("embedder");
    c.embedder.dimension = e.at("dimension").get<std::size_t>();
    c.embedder.seed = e.at("seed").get<std::uint64_t>();
    c.embedder.threshold = e.at("threshold").get<double>();
    c.embedder.positive_prompt = e.at("positive_prompt").get<std::string>();
    c.embedder.negative_prompt = e.at("negative_prompt").get<std::string>();

    c.mapping.bin_count = j.at("mapping").at("bin_count").get<std::size_t>();
    c.mapping.per_bin = j.at("mapping").at("per_bin").get<std::size_t>();

    nlohmann::json model = j.at("model");
    model["attributes"] = attribute_list(c.attributes);
    c.model = model_config_from_json(model);

    const auto& s = j.at("schedule");
    c.schedule = {s.at("steps").get<int>(), s.at("beta_start").get<double>(), s.at("beta_end").get<double>()};

    nlohmann::json train = j.at("train");
    train["seed"] = c.seed;
    c.train = train_config_from_json(train);
    c.log_every = j.at("log_every").get<int>();

    nlohmann::json sweep = j.at("sweep");
    c.sweep_attributes = parse_attribute_list(sweep.at("attributes"));
    sweep.erase("attributes");
    sweep["seed"] = c.seed;
    c.sweep = sweep_config_from_json(sweep);

    c.report_formats.clear();
    for (const auto& f : j.at("reports").at("formats")) c.report_formats.push_back(parse_report_format(f.get<std::string>()));

    const auto& g = j.at("generate");
    c.generate.class_id = g.at("class").get<int>();
    c.generate.count = g.at("count").get<int>();
    for (auto it = g.at("intensities").begin(); it != g.at("intensities").end(); ++it) {
      c.generate.intensities[parse_attribute(it.key())] = it.value().get<double>();
    }
    c.safety_samples = j.at("safety_eval").at("samples").get<int>();
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("invalid configuration: ") + ex.what());
  }
  c.validate();
  return c;
}

void apply_override(nlohmann::json& j, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override must look like key.path=value, got '" + std::string(assignment) + "'");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;
  }
  nlohmann::json* node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("empty path component in override '" + key + "'");
    if (!node->is_object()) *node = nlohmann::json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

ScoringResources::ScoringResources(const EmbedderConfig& cfg)
    : embedder(cfg.dimension, cfg.seed),
      safety_concept(embedder.unsafe_concept(), cfg.threshold),
      prompts(cfg.positive_prompt, cfg.negative_prompt) {}

MappingOutput build_training_data(const Manifest& scored, std::string_view scored_hash,
                                  const std::vector<AttributeKind>& attributes, const MappingConfig& cfg,
                                  std::uint64_t seed, const std::filesystem::path& path_prefix) {
  if (scored.rows.empty()) throw ContractError("scored manifest is empty");
  MappingOutput out;
  std::map<AttributeKind, BinAssignment> assignments;
  std::vector<std::size_t> selected;

  for (AttributeKind kind : attributes) {
    std::vector<double> values;
    std::vector<Record> records;
    for (std::size_t i = 0; i < scored.rows.size(); ++i) {
      auto it = scored.rows[i].raw.find(kind);
      if (it == scored.rows[i].raw.end()) {
        throw ConfigError("row " + std::to_string(i) + " has no raw '" + std::string(to_string(kind)) + "' score");
      }
      values.push_back(it->second);
      records.push_back({std::to_string(i), it->second});
    }
    BinAssignment bins = assign_bins(values, cfg.bin_count);
    const std::vector<Record> balanced =
        balance(records, bins, cfg.per_bin, mix_seed(seed, fnv1a64(to_string(kind))));
    std::vector<double> balanced_values;
    for (const Record& r : balanced) {
      balanced_values.push_back(r.raw);
      selected.push_back(std::stoul(r.id));
    }
    MappingTable table = build_mapping_table(kind, balanced_values);
    table.bin_count = bins.bin_count;
    table.per_bin = cfg.per_bin;
    table.lo = bins.lo;
    table.hi = bins.hi;
    table.source_manifest_hash = std::string(scored_hash);
    out.tables.emplace(kind, std::move(table));
    assignments.emplace(kind, std::move(bins));
  }

  for (std::size_t index : selected) {
    ManifestRow row = scored.rows[index];
    row.path = (path_prefix / row.path).generic_string();
    for (AttributeKind kind : attributes) {
      const double raw = row.raw.at(kind);
      row.normalized[kind] = to_normalized(out.tables.at(kind), raw);
      row.bins[kind] = assignments.at(kind).bin_of(raw);
    }
    out.training.rows.push_back(std::move(row));
  }
  return out;
}

TrainingSet load_training_set(const Manifest& m, const std::filesystem::path& base_dir, const ModelConfig& model) {
  const DenoiserConfig& dc = model.denoiser;
  TrainingSet ts;
  const auto n = static_cast<Eigen::Index>(m.rows.size());
  ts.images.resize(n, dc.pixels());
  ts.intensities.resize(n, static_cast<Eigen::Index>(model.attributes.size()));
  // Duplicate rows (from oversampling) decode once.
  std::map<std::string, std::vector<float>> decoded;
  for (Eigen::Index i = 0; i < n; ++i) {
    const ManifestRow& row = m.rows[static_cast<std::size_t>(i)];
    auto it = decoded.find(row.path);
    if (it == decoded.end()) {
      const Image img = load_verified(base_dir / row.path, row.hash);
      if (img.width() != dc.image_size || img.height() != dc.image_size) {
        throw ContractError(row.path + ": image size does not match the model");
      }
      it = decoded.emplace(row.path, image_to_tensor(img, dc.channels)).first;
    }
    ts.images.row(i) = Eigen::Map<const Eigen::RowVectorXf>(it->second.data(), dc.pixels());
    int cls = 0;
    if (row.spec && row.spec->contains("shape")) {
      cls = static_cast<int>(parse_shape_class(row.spec->at("shape").get<std::string>()));
    }
    ts.classes.push_back(cls);
    for (std::size_t a = 0; a < model.attributes.size(); ++a) {
      auto v = row.normalized.find(model.attributes[a]);
      if (v == row.normalized.end()) {
        throw ConfigError(row.path + ": missing normalized '" + std::string(to_string(model.attributes[a])) + "'");
      }
      ts.intensities(i, static_cast<Eigen::Index>(a)) = v->second;
    }
  }
  ts.validate(model);
  return ts;
}

void run_synth(const PipelineConfig& cfg) {
  const Layout L{cfg.workdir};
  generate_corpus(cfg.corpus, L.corpus_dir());
  write_snapshot(L.corpus_dir(), "synth", cfg);
}

void run_score(const PipelineConfig& cfg) {
  const Layout L{cfg.workdir};
  const ScoringResources res(cfg.embedder);
  Manifest m = read_manifest(L.corpus_manifest());
  std::map<std::string, std::vector<double>> image_vectors;
  for (ManifestRow& row : m.rows) {
    const Image img = load_verified(L.corpus_dir() / row.path, row.hash);
    const ScoreMap scores = score_all(img, res.embedder, res.prompts, res.safety_concept);
    row.raw.clear();
    for (const auto& [kind, s] : scores) row.raw[kind] = s.value;
    image_vectors[image_content_hash(img)] = res.embedder.embed_image(img);
  }
  std::map<std::string, std::vector<double>> text_vectors;
  for (const std::string& text : {res.prompts.positive(), res.prompts.negative()}) {
    text_vectors[sha256_hex(text)] = res.embedder.embed_text(text);
  }
  write_manifest(L.scored_manifest(), m);
  write_embedding_cache(L.embedding_cache(), res.embedder.dimension(), image_vectors, text_vectors);
  write_snapshot(L.corpus_dir(), "score", cfg);
}

void run_map(const PipelineConfig& cfg) {
  const Layout L{cfg.workdir};
  const Manifest scored = read_manifest(L.scored_manifest());
  const MappingOutput out = build_training_data(scored, file_hash(L.scored_manifest()), cfg.attributes, cfg.mapping,
                                                cfg.seed, std::filesystem::path("..") / "corpus");
  for (const auto& [kind, table] : out.tables) write_text_atomic(L.table(kind), to_json(table).dump(1) + "\n");
  write_manifest(L.training_manifest(), out.training);
  write_snapshot(L.tables_dir(), "map", cfg);
}

Checkpoint run_train(const PipelineConfig& cfg, const StepCallback& on_step) {
  const Layout L{cfg.workdir};
  const ModelConfig model_cfg = resolved_model(cfg);
  Checkpoint ckpt;
  for (AttributeKind kind : cfg.attributes) {
    ckpt.tables[kind] = mapping_table_from_json(nlohmann::json::parse(read_text(L.table(kind))));
  }
  const Manifest training = read_manifest(L.training_manifest());
  const TrainingSet data = load_training_set(training, L.tables_dir(), model_cfg);

  Rng init = Rng::stream(cfg.seed, "init");
  Trainer<float> trainer(AttriCtrlModel<float>::random(model_cfg, init), cfg.schedule.build(), cfg.train);
  std::string losses = "step,loss\n";
  trainer.fit(data, [&](long step, double loss) {
    char line[64];
    std::snprintf(line, sizeof(line), "%ld,%.9g\n", step, loss);
    losses += line;
    if (on_step) on_step(step, loss);
  });

  ckpt.model = trainer.model();
  ckpt.schedule = trainer.schedule();
  ckpt.train = cfg.train;
  ckpt.extra = {{"training_manifest_hash", file_hash(L.training_manifest())}, {"training_rows", data.size()}};
  write_checkpoint(L.checkpoint(), ckpt);
  write_text_atomic(L.model_dir() / "losses.csv", losses);
  write_snapshot(L.model_dir(), "train", cfg);
  return ckpt;
}

void run_generate(const PipelineConfig& cfg) {
  const Layout L{cfg.workdir};
  const Checkpoint ckpt = read_checkpoint(L.checkpoint());
  const ScoringResources res(cfg.embedder);
  std::map<AttributeKind, double> intensities;
  for (AttributeKind k : ckpt.model.config.attributes) {
    auto it = cfg.generate.intensities.find(k);
    intensities[k] = it == cfg.generate.intensities.end() ? 0.5 : it->second;
  }
  std::vector<SampleRequest> reqs;
  for (int i = 0; i < cfg.generate.count; ++i) {
    reqs.push_back({cfg.generate.class_id, intensity_vector(ckpt.model.config, intensities),
                    mix_seed(cfg.seed, static_cast<std::uint64_t>(i))});
  }
  const std::vector<Image> images = sample_batch(ckpt.model, ckpt.schedule, reqs);
  Manifest m;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::vector<std::uint8_t> png = encode_image(images[i]);
    char name[32];
    std::snprintf(name, sizeof(name), "images/%06zu.png", i);
    write_file_atomic(L.generated_dir() / name, png);
    ManifestRow row;
    row.path = name;
    row.hash = sha256_hex(png);
    nlohmann::json targets = nlohmann::json::object();
    for (const auto& [k, v] : intensities) targets[std::string(to_string(k))] = v;
    row.spec = nlohmann::json{{"class", reqs[i].class_id}, {"intensities", targets}, {"seed", reqs[i].seed}};
    for (const auto& [kind, s] : score_all(images[i], res.embedder, res.prompts, res.safety_concept)) {
      row.raw[kind] = s.value;
    }
    for (const auto& [kind, table] : ckpt.tables) row.normalized[kind] = to_normalized(table, row.raw.at(kind));
    m.rows.push_back(std::move(row));
  }
  write_manifest(L.generated_dir() / "manifest.jsonl", m);
  write_snapshot(L.generated_dir(), "generate", cfg);
}

std::vector<SweepResult> run_sweep_stage(const PipelineConfig& cfg) {
  const Layout L{cfg.workdir};
  const Checkpoint ckpt = read_checkpoint(L.checkpoint());
  const ScoringResources res(cfg.embedder);
  const std::vector<AttributeKind> kinds = cfg.sweep_attributes.empty() ? ckpt.model.config.attributes
                                                                         : cfg.sweep_attributes;
  std::vector<SweepResult> results;
  for (AttributeKind kind : kinds) results.push_back(run_sweep(ckpt, kind, cfg.sweep, res.context()));
  for (ReportFormat f : cfg.report_formats) {
    write_report(L.reports_dir() / ("sweep." + std::string(extension(f))), results, f);
  }
  write_snapshot(L.reports_dir(), "sweep", cfg);
  return results;
}

SafetyEvalResult run_safety_stage(const PipelineConfig& cfg) {
  const Layout L{cfg.workdir};
  const Checkpoint ckpt = read_checkpoint(L.checkpoint());
  const ScoringResources res(cfg.embedder);
  const SafetyEvalResult r = run_safety_eval(ckpt, cfg.safety_samples, cfg.seed, res.context());
  nlohmann::json j = to_json(r);
  j["format_version"] = 1;
  write_text_atomic(L.reports_dir() / "safety.json", j.dump(2) + "\n");
  write_snapshot(L.reports_dir(), "safety-eval", cfg);
  if (!r.rr) {
    throw UndefinedRateError("no unsafe outputs at safety intensity 0 (n_s = " + std::to_string(r.n_s) +
                             "); the removal rate is undefined");
  }
  return r;
}

}  // namespace attrictrl
