#pragma once

#include <array>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "attrictrl/rng.hpp"
#include "attrictrl/tensor.hpp"

namespace attrictrl {

inline constexpr int kValueTokenCount = 32;

struct SinusoidSpec {
  int dim = 64;
  double base = 10000.0;

  void validate() const;
};

// out[2j] = sin(v / base^(2j/dim)), out[2j+1] = cos(v / base^(2j/dim)).
// Values outside [0,1] are accepted and extrapolate smoothly.
template <typename T>
Mat<T> sinusoid(double value, const SinusoidSpec& spec);

// Sinusoids of several values, one per row.
template <typename T>
Mat<T> sinusoid_rows(std::span<const double> values, const SinusoidSpec& spec);

// Scalar intensity -> sinusoid -> w2 silu(w1 s + b1) + b2 -> 32 copies plus
// learned positional rows. Weight matrices are stored (out x in).
template <typename T>
struct ValueEncoderParams {
  Mat<T> w1;       // hidden x sinusoid dim
  Mat<T> b1;       // 1 x hidden
  Mat<T> w2;       // model x hidden
  Mat<T> b2;       // 1 x model
  Mat<T> pos_emb;  // 32 x model

  static ValueEncoderParams zeros(int sinusoid_dim, int hidden_dim, int model_dim);
  // Fan-in scaled Gaussian weights, zero biases, N(0, 0.02^2) positions.
  static ValueEncoderParams random(int sinusoid_dim, int hidden_dim, int model_dim, Rng& rng);

  int sinusoid_dim() const noexcept { return static_cast<int>(w1.cols()); }
  int hidden_dim() const noexcept { return static_cast<int>(w1.rows()); }
  int model_dim() const noexcept { return static_cast<int>(w2.rows()); }

  static constexpr auto members() {
    using P = ValueEncoderParams;
    return std::to_array<std::pair<std::string_view, Mat<T> P::*>>(
        {{"w1", &P::w1}, {"b1", &P::b1}, {"w2", &P::w2}, {"b2", &P::b2}, {"pos_emb", &P::pos_emb}});
  }

  TensorList<T> tensors();
  void validate(const SinusoidSpec& spec) const;
  void set_zero();
};

// Shared base representation h for each value (one row per value); the
// tokens of value i are h.row(i) + pos_emb.
template <typename T>
struct EncoderBatch {
  Mat<T> sin;  // B x sinusoid dim
  Mat<T> pre;  // B x hidden, before SiLU
  Mat<T> act;  // B x hidden
  Mat<T> h;    // B x model
};

template <typename T>
EncoderBatch<T> encode_batch(std::span<const double> values, const ValueEncoderParams<T>& params,
                             const SinusoidSpec& spec);

// Accumulates into grads given dL/dh (B x model, already summed over the 32
// token rows) and dL/dpos (32 x model, already summed over the batch).
template <typename T>
void encode_batch_backward(const EncoderBatch<T>& cache, const ValueEncoderParams<T>& params,
                           const Mat<T>& grad_h, const Mat<T>& grad_pos, ValueEncoderParams<T>& grads);

// 32 x model token matrix for one value.
template <typename T>
Mat<T> encode(double value, const ValueEncoderParams<T>& params, const SinusoidSpec& spec);

// Exact gradient of sum(tokens .* upstream) with respect to every parameter.
template <typename T>
ValueEncoderParams<T> encode_backward(double value, const ValueEncoderParams<T>& params,
                                      const SinusoidSpec& spec, const Mat<T>& upstream);

// Row-wise concatenation, input order preserved.
template <typename T>
Mat<T> compose(std::span<const Mat<T>> sequences);

}  // namespace attrictrl
