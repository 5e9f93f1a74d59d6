#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "attrictrl/image.hpp"
#include "attrictrl/model.hpp"

namespace attrictrl {

struct TrainConfig {
  int batch_size = 32;
  long steps = 4000;
  double learning_rate = 1e-3;
  // Only "adamw" is implemented; the name is recorded with every checkpoint.
  std::string optimizer = "adamw";
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

// Pixels scaled to [-1, 1], channel-planar; one channel means BT.601 luma.
std::vector<float> image_to_tensor(const Image& img, int channels);
// Clamps to [-1, 1] and quantizes to 8 bits; one channel renders as gray.
Image tensor_to_image(std::span<const float> values, int size, int channels);

// In-memory training data: N images with class ids and normalized
// intensities for each conditioned attribute (N x k).
struct TrainingSet {
  Mat<float> images;
  std::vector<int> classes;
  Mat<double> intensities;

  int size() const noexcept { return static_cast<int>(images.rows()); }
  void validate(const ModelConfig& cfg) const;
};

template <typename T>
class AdamW {
 public:
  AdamW(AttriCtrlModel<T>& model, const TrainConfig& cfg);
  void step(AttriCtrlModel<T>& model, AttriCtrlModel<T>& grads);
  long iterations() const noexcept { return t_; }

 private:
  TrainConfig cfg_;
  std::vector<Mat<T>> m_, v_;
  long t_ = 0;
};

// Joint optimization of the denoiser and every value encoder on the noise
// prediction loss. Randomness comes from the named streams "batch",
// "timestep" and "noise" derived from TrainConfig::seed.
template <typename T>
class Trainer {
 public:
  Trainer(AttriCtrlModel<T> model, NoiseSchedule sched, TrainConfig cfg);

  PreparedBatch<T> draw_batch(const TrainingSet& data);
  // One update on the given batch; returns the loss before the update.
  double apply(const PreparedBatch<T>& batch);
  // draw_batch + apply. Throws TrainingDivergenceError on a non-finite loss.
  double train_step(const TrainingSet& data);

  // Runs cfg.steps updates; calls on_step(step, loss) after each one.
  std::vector<double> fit(const TrainingSet& data,
                          const std::function<void(long, double)>& on_step = {});

  const AttriCtrlModel<T>& model() const noexcept { return model_; }
  AttriCtrlModel<T>& model() noexcept { return model_; }
  const NoiseSchedule& schedule() const noexcept { return sched_; }
  long step() const noexcept { return step_; }

 private:
  AttriCtrlModel<T> model_;
  AttriCtrlModel<T> grads_;
  NoiseSchedule sched_;
  TrainConfig cfg_;
  AdamW<T> optimizer_;
  Rng batch_rng_, timestep_rng_, noise_rng_;
  long step_ = 0;
};

}  // namespace attrictrl
