#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "attrictrl/denoiser.hpp"
#include "attrictrl/diffusion.hpp"
#include "attrictrl/metrics.hpp"
#include "attrictrl/value_encoder.hpp"

namespace attrictrl {

struct ModelConfig {
  DenoiserConfig denoiser;
  SinusoidSpec value_sinusoid;
  int encoder_hidden = 256;
  // Conditioned attributes, in the order their token blocks are composed.
  std::vector<AttributeKind> attributes;

  void validate() const;
  int conditioning_length() const noexcept {
    return denoiser.class_tokens + kValueTokenCount * static_cast<int>(attributes.size());
  }
};

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

// Denoiser plus one independent value encoder per conditioned attribute.
template <typename T>
struct AttriCtrlModel {
  ModelConfig config;
  DenoiserParams<T> denoiser;
  std::vector<ValueEncoderParams<T>> encoders;

  static AttriCtrlModel zeros(const ModelConfig& cfg);
  static AttriCtrlModel random(const ModelConfig& cfg, Rng& rng);

  // Names are "denoiser/<tensor>" and "encoder/<attribute>/<tensor>".
  TensorList<T> tensors();
  std::size_t parameter_count() const;
  void set_zero();

  template <typename U>
  AttriCtrlModel<U> cast() const;
};

// Conditioning for a batch: class tokens of each element's class followed by
// the composed value tokens of each attribute. Intensities are B x k.
template <typename T>
struct ConditioningCache {
  std::vector<EncoderBatch<T>> encoders;
};

template <typename T>
Mat<T> build_conditioning(const AttriCtrlModel<T>& model, std::span<const int> classes,
                          const Mat<double>& intensities, ConditioningCache<T>* cache = nullptr);

template <typename T>
void conditioning_backward(const AttriCtrlModel<T>& model, const ConditioningCache<T>& cache,
                           std::span<const int> classes, const Mat<T>& grad_cond, AttriCtrlModel<T>& grads);

template <typename T>
struct PreparedBatch {
  Mat<T> z0;   // B x pixels in [-1, 1]
  Mat<T> eps;  // B x pixels, standard normal
  std::vector<int> timesteps;
  std::vector<int> classes;
  Mat<double> intensities;  // B x attributes, in [0, 1]

  int size() const noexcept { return static_cast<int>(z0.rows()); }
};

// Mean squared noise-prediction error over the batch and all pixels. When
// grads is non-null the exact gradient is accumulated into it; when
// grad_cond is non-null it receives dL/d(conditioning rows).
template <typename T>
double loss_and_grad(const AttriCtrlModel<T>& model, const NoiseSchedule& sched,
                     const PreparedBatch<T>& batch, AttriCtrlModel<T>* grads = nullptr,
                     Mat<T>* grad_cond = nullptr);

}  // namespace attrictrl
