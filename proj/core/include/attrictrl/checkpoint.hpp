#pragma once

#include <filesystem>
#include <map>

#include <json.hpp>

#include "attrictrl/container.hpp"
#include "attrictrl/diffusion.hpp"
#include "attrictrl/model.hpp"
#include "attrictrl/trainer.hpp"
#include "attrictrl/value_mapping.hpp"

namespace attrictrl {

// Everything needed to sample and evaluate: parameters, the noise schedule,
// the training configuration (seed included) and the mapping tables the
// training labels were produced with. `extra` carries free-form provenance.
struct Checkpoint {
  AttriCtrlModel<float> model;
  NoiseSchedule schedule = NoiseSchedule::linear();
  TrainConfig train;
  std::map<AttributeKind, MappingTable> tables;
  nlohmann::json extra = nlohmann::json::object();

  const MappingTable& table(AttributeKind kind) const;
};

Container to_container(const Checkpoint& ckpt);
// Throws ConfigError on missing or mis-shaped sections.
Checkpoint checkpoint_from_container(const Container& c);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace attrictrl
