#include "attrictrl/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "attrictrl/error.hpp"

namespace attrictrl {

void TrainConfig::validate() const {
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (steps <= 0) throw ConfigError("steps must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (optimizer != "adamw") throw ConfigError("unsupported optimizer '" + optimizer + "' (only adamw)");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must be in [0,1)");
  if (!(epsilon > 0.0) || weight_decay < 0.0) throw ConfigError("invalid epsilon or weight_decay");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size}, {"steps", c.steps},   {"learning_rate", c.learning_rate},
          {"optimizer", c.optimizer},   {"beta1", c.beta1},   {"beta2", c.beta2},
          {"epsilon", c.epsilon},       {"weight_decay", c.weight_decay}, {"seed", c.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.batch_size = j.value("batch_size", c.batch_size);
  c.steps = j.value("steps", c.steps);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.optimizer = j.value("optimizer", c.optimizer);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

std::vector<float> image_to_tensor(const Image& img, int channels) {
  if (img.width() != img.height()) throw ContractError("model images must be square");
  const std::size_t n = img.size();
  std::vector<float> out(n * static_cast<std::size_t>(channels));
  auto scale = [](std::uint8_t v) { return static_cast<float>(v) / 127.5f - 1.0f; };
  const auto px = img.pixels();
  for (std::size_t i = 0; i < n; ++i) {
    if (channels == 1) {
      out[i] = scale(luma(px[i]));
    } else {
      out[i] = scale(px[i].r);
      out[n + i] = scale(px[i].g);
      out[2 * n + i] = scale(px[i].b);
    }
  }
  return out;
}

Image tensor_to_image(std::span<const float> values, int size, int channels) {
  const std::size_t n = static_cast<std::size_t>(size) * static_cast<std::size_t>(size);
  if (values.size() != n * static_cast<std::size_t>(channels)) throw ContractError("tensor size does not match image shape");
  auto quantize = [](float x) {
    const double c = std::clamp(static_cast<double>(x), -1.0, 1.0);
    return static_cast<std::uint8_t>(std::lround((c + 1.0) * 127.5));
  };
  std::vector<Rgb> px(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (channels == 1) {
      const std::uint8_t v = quantize(values[i]);
      px[i] = {v, v, v};
    } else {
      px[i] = {quantize(values[i]), quantize(values[n + i]), quantize(values[2 * n + i])};
    }
  }
  return Image(size, size, std::move(px));
}

void TrainingSet::validate(const ModelConfig& cfg) const {
  if (images.rows() == 0) throw ContractError("training set is empty");
  if (images.cols() != cfg.denoiser.pixels()) throw ContractError("training images do not match the model image shape");
  if (static_cast<Eigen::Index>(classes.size()) != images.rows() || intensities.rows() != images.rows() ||
      intensities.cols() != static_cast<Eigen::Index>(cfg.attributes.size())) {
    throw ContractError("training set columns are inconsistent");
  }
  for (int c : classes) {
    if (c < 0 || c >= cfg.denoiser.num_classes) throw ContractError("training class id out of range");
  }
  for (Eigen::Index i = 0; i < intensities.size(); ++i) {
    const double v = intensities.data()[i];
    if (!(v >= 0.0 && v <= 1.0)) throw ContractError("training intensities must lie in [0,1]");
  }
}

template <typename T>
AdamW<T>::AdamW(AttriCtrlModel<T>& model, const TrainConfig& cfg) : cfg_(cfg) {
  for (auto& t : model.tensors()) {
    m_.push_back(Mat<T>::Zero(t.value->rows(), t.value->cols()));
    v_.push_back(Mat<T>::Zero(t.value->rows(), t.value->cols()));
  }
}

template <typename T>
void AdamW<T>::step(AttriCtrlModel<T>& model, AttriCtrlModel<T>& grads) {
  ++t_;
  const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)));
  const T c2 = static_cast<T>(1.0 - std::pow(cfg_.beta2, static_cast<double>(t_)));
  const T lr = static_cast<T>(cfg_.learning_rate);
  const T eps = static_cast<T>(cfg_.epsilon);
  const T decay = static_cast<T>(1.0 - cfg_.learning_rate * cfg_.weight_decay);
  auto params = model.tensors();
  auto g = grads.tensors();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Mat<T>& p = *params[i].value;
    const Mat<T>& gi = *g[i].value;
    m_[i] = b1 * m_[i] + (T(1) - b1) * gi;
    v_[i] = b2 * v_[i] + (T(1) - b2) * gi.cwiseProduct(gi);
    if (cfg_.weight_decay != 0.0) p *= decay;
    p.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps);
  }
}

template <typename T>
Trainer<T>::Trainer(AttriCtrlModel<T> model, NoiseSchedule sched, TrainConfig cfg)
    : model_(std::move(model)),
      grads_(AttriCtrlModel<T>::zeros(model_.config)),
      sched_(std::move(sched)),
      cfg_(std::move(cfg)),
      optimizer_(model_, cfg_),
      batch_rng_(Rng::stream(cfg_.seed, "batch")),
      timestep_rng_(Rng::stream(cfg_.seed, "timestep")),
      noise_rng_(Rng::stream(cfg_.seed, "noise")) {
  cfg_.validate();
}

template <typename T>
PreparedBatch<T> Trainer<T>::draw_batch(const TrainingSet& data) {
  const int B = cfg_.batch_size;
  const int pixels = model_.config.denoiser.pixels();
  const int k = static_cast<int>(model_.config.attributes.size());
  PreparedBatch<T> batch;
  batch.z0.resize(B, pixels);
  batch.eps.resize(B, pixels);
  batch.intensities.resize(B, k);
  for (int b = 0; b < B; ++b) {
    const auto idx = static_cast<Eigen::Index>(batch_rng_.below(static_cast<std::uint64_t>(data.size())));
    batch.z0.row(b) = data.images.row(idx).template cast<T>();
    batch.classes.push_back(data.classes[static_cast<std::size_t>(idx)]);
    batch.intensities.row(b) = data.intensities.row(idx);
    batch.timesteps.push_back(static_cast<int>(timestep_rng_.below(static_cast<std::uint64_t>(sched_.steps()))));
    for (int p = 0; p < pixels; ++p) batch.eps(b, p) = static_cast<T>(noise_rng_.normal());
  }
  return batch;
}

template <typename T>
double Trainer<T>::apply(const PreparedBatch<T>& batch) {
  grads_.set_zero();
  const double loss = loss_and_grad(model_, sched_, batch, &grads_);
  if (!std::isfinite(loss)) throw TrainingDivergenceError(step_ + 1, loss);
  optimizer_.step(model_, grads_);
  ++step_;
  return loss;
}

template <typename T>
double Trainer<T>::train_step(const TrainingSet& data) {
  return apply(draw_batch(data));
}

template <typename T>
std::vector<double> Trainer<T>::fit(const TrainingSet& data, const std::function<void(long, double)>& on_step) {
  data.validate(model_.config);
  std::vector<double> losses;
  losses.reserve(static_cast<std::size_t>(cfg_.steps));
  for (long s = 0; s < cfg_.steps; ++s) {
    const double loss = train_step(data);
    losses.push_back(loss);
    if (on_step) on_step(step_, loss);
  }
  return losses;
}

template class AdamW<float>;
template class AdamW<double>;
template class Trainer<float>;
template class Trainer<double>;

}  // namespace attrictrl
