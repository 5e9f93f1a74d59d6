#pragma once

#include <array>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "attrictrl/rng.hpp"
#include "attrictrl/tensor.hpp"

namespace attrictrl {

// Patch-token noise predictor: patch embedding + timestep projection, one
// multi-head cross-attention block whose keys and values come from the
// conditioning sequence, a two-layer SiLU MLP, and a linear read-out back to
// patch pixels. Both blocks are residual.
struct DenoiserConfig {
  int image_size = 32;
  int channels = 3;
  int patch = 4;
  int model_dim = 64;
  int heads = 4;
  int mlp_hidden = 256;
  int time_dim = 64;
  int num_classes = 4;
  int class_tokens = 4;

  int patches_per_side() const noexcept { return image_size / patch; }
  int patches() const noexcept { return patches_per_side() * patches_per_side(); }
  int patch_dim() const noexcept { return channels * patch * patch; }
  int pixels() const noexcept { return channels * image_size * image_size; }
  int head_dim() const noexcept { return model_dim / heads; }

  void validate() const;
  friend bool operator==(const DenoiserConfig&, const DenoiserConfig&) = default;
};

nlohmann::json to_json(const DenoiserConfig& cfg);
DenoiserConfig denoiser_config_from_json(const nlohmann::json& j);

// Weights are stored (out x in); biases are 1 x out rows.
template <typename T>
struct DenoiserParams {
  Mat<T> w_in, b_in;      // model x patch_dim, 1 x model
  Mat<T> pos;             // patches x model
  Mat<T> w_time, b_time;  // model x time_dim, 1 x model
  Mat<T> class_emb;       // (num_classes * class_tokens) x model
  Mat<T> wq, wk, wv;      // model x model
  Mat<T> wo, bo;          // model x model, 1 x model
  Mat<T> w1, b1;          // hidden x model, 1 x hidden
  Mat<T> w2, b2;          // model x hidden, 1 x model
  Mat<T> w_out, b_out;    // patch_dim x model, 1 x patch_dim

  static DenoiserParams zeros(const DenoiserConfig& cfg);
  static DenoiserParams random(const DenoiserConfig& cfg, Rng& rng);

  static constexpr auto members() {
    using P = DenoiserParams;
    return std::to_array<std::pair<std::string_view, Mat<T> P::*>>(
        {{"w_in", &P::w_in}, {"b_in", &P::b_in}, {"pos", &P::pos}, {"w_time", &P::w_time},
         {"b_time", &P::b_time}, {"class_emb", &P::class_emb}, {"wq", &P::wq}, {"wk", &P::wk},
         {"wv", &P::wv}, {"wo", &P::wo}, {"bo", &P::bo}, {"w1", &P::w1}, {"b1", &P::b1},
         {"w2", &P::w2}, {"b2", &P::b2}, {"w_out", &P::w_out}, {"b_out", &P::b_out}});
  }

  TensorList<T> tensors();
  void check(const DenoiserConfig& cfg) const;
};

// Key/value projections of a batch of conditioning sequences, each `length`
// rows long and stacked in batch order.
template <typename T>
struct CondProjection {
  int length = 0;
  Mat<T> k;  // (B * length) x model
  Mat<T> v;
};

template <typename T>
CondProjection<T> project_conditioning(const DenoiserConfig& cfg, const DenoiserParams<T>& params,
                                       const Mat<T>& cond, int batch);

template <typename T>
struct DenoiserCache {
  Mat<T> x;         // (B*P) x patch_dim
  Mat<T> time_sin;  // B x time_dim
  Mat<T> h0, q, o, h1, u, h2;
  std::vector<Mat<T>> probs;  // B*heads matrices, P x length
};

// z_t is B x pixels (channel-planar). Returns eps_hat with the same shape.
template <typename T>
Mat<T> denoise_batch(const DenoiserConfig& cfg, const DenoiserParams<T>& params, const Mat<T>& z_t,
                     std::span<const int> timesteps, const CondProjection<T>& cond,
                     DenoiserCache<T>* cache = nullptr);

// Accumulates parameter gradients into grads and returns dL/dcond.
template <typename T>
Mat<T> denoise_batch_backward(const DenoiserConfig& cfg, const DenoiserParams<T>& params,
                              const DenoiserCache<T>& cache, const Mat<T>& cond,
                              const CondProjection<T>& proj, const Mat<T>& grad_eps,
                              DenoiserParams<T>& grads);

// Single sample: z_t is 1 x pixels, cond is length x model.
template <typename T>
Mat<T> denoise(const DenoiserConfig& cfg, const DenoiserParams<T>& params, const Mat<T>& z_t,
               const Mat<T>& cond, int t);

template <typename T>
Mat<T> patchify(const DenoiserConfig& cfg, const Mat<T>& images);
template <typename T>
Mat<T> unpatchify(const DenoiserConfig& cfg, const Mat<T>& tokens, int batch);

}  // namespace attrictrl
