#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "attrictrl/image.hpp"
#include "attrictrl/model.hpp"

namespace attrictrl {

struct SampleRequest {
  int class_id = 0;
  std::vector<double> intensities;  // one per conditioned attribute, model order
  std::uint64_t seed = 0;
};

// Orders an attribute -> intensity map by the model's attribute list. Every
// conditioned attribute must be present and no others; values must be in [0,1].
std::vector<double> intensity_vector(const ModelConfig& cfg, const std::map<AttributeKind, double>& intensities);

// Ancestral DDPM sampling from t = T-1 to 0. Each request draws its initial
// and per-step noise from its own "sampler" stream seeded by request.seed.
template <typename T>
std::vector<Image> sample_batch(const AttriCtrlModel<T>& model, const NoiseSchedule& sched,
                                std::span<const SampleRequest> requests);

template <typename T>
Image sample(const AttriCtrlModel<T>& model, int class_id, const std::map<AttributeKind, double>& intensities,
             const NoiseSchedule& sched, std::uint64_t seed);

}  // namespace attrictrl
