#include "attrictrl/checkpoint.hpp"

#include <string>

#include "attrictrl/error.hpp"

namespace attrictrl {

const MappingTable& Checkpoint::table(AttributeKind kind) const {
  auto it = tables.find(kind);
  if (it == tables.end()) {
    throw ConfigError("checkpoint has no mapping table for '" + std::string(to_string(kind)) + "'");
  }
  return it->second;
}

Container to_container(const Checkpoint& ckpt) {
  Container c;
  c.magic = std::string(kCheckpointMagic);
  nlohmann::json tables = nlohmann::json::object();
  for (const auto& [kind, t] : ckpt.tables) tables[std::string(to_string(kind))] = to_json(t);
  c.meta = {{"model", to_json(ckpt.model.config)},
            {"schedule", {{"betas", ckpt.schedule.betas()}}},
            {"train", to_json(ckpt.train)},
            {"seed", ckpt.train.seed},
            {"mapping_tables", tables},
            {"extra", ckpt.extra}};
  auto& model = const_cast<AttriCtrlModel<float>&>(ckpt.model);
  for (const auto& t : model.tensors()) {
    TensorSection s;
    s.name = t.name;
    s.rows = static_cast<std::size_t>(t.value->rows());
    s.cols = static_cast<std::size_t>(t.value->cols());
    s.data.assign(t.value->data(), t.value->data() + t.value->size());
    c.sections.push_back(std::move(s));
  }
  return c;
}

Checkpoint checkpoint_from_container(const Container& c) {
  Checkpoint ckpt;
  try {
    const nlohmann::json& meta = c.meta;
    const ModelConfig cfg = model_config_from_json(meta.at("model"));
    ckpt.model = AttriCtrlModel<float>::zeros(cfg);
    ckpt.schedule = NoiseSchedule::from_betas(meta.at("schedule").at("betas").get<std::vector<double>>());
    ckpt.train = train_config_from_json(meta.at("train"));
    for (auto it = meta.at("mapping_tables").begin(); it != meta.at("mapping_tables").end(); ++it) {
      ckpt.tables[parse_attribute(it.key())] = mapping_table_from_json(it.value());
    }
    ckpt.extra = meta.value("extra", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint metadata is malformed: ") + e.what());
  }
  for (const auto& t : ckpt.model.tensors()) {
    const TensorSection& s = c.section(t.name);
    if (s.rows != static_cast<std::size_t>(t.value->rows()) || s.cols != static_cast<std::size_t>(t.value->cols())) {
      throw ConfigError("checkpoint section '" + t.name + "' has the wrong shape");
    }
    std::copy(s.data.begin(), s.data.end(), t.value->data());
  }
  if (c.sections.size() != ckpt.model.tensors().size()) throw ConfigError("checkpoint has unexpected sections");
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_container(path, to_container(ckpt));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_container(read_container(path, kCheckpointMagic));
}

}  // namespace attrictrl
