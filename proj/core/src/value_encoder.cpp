#include "attrictrl/value_encoder.hpp"

#include <cmath>
#include <string>

#include "attrictrl/error.hpp"

namespace attrictrl {

void SinusoidSpec::validate() const {
  if (dim <= 0 || dim % 2 != 0) throw ConfigError("sinusoid dim must be a positive even integer");
  if (!(base > 1.0)) throw ConfigError("sinusoid base must exceed 1");
}

template <typename T>
Mat<T> sinusoid(double value, const SinusoidSpec& spec) {
  return sinusoid_rows<T>(std::span(&value, 1), spec);
}

template <typename T>
Mat<T> sinusoid_rows(std::span<const double> values, const SinusoidSpec& spec) {
  spec.validate();
  Mat<T> out(static_cast<Eigen::Index>(values.size()), spec.dim);
  for (int j = 0; j < spec.dim / 2; ++j) {
    const double freq = std::pow(spec.base, -2.0 * j / spec.dim);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double arg = values[i] * freq;
      out(static_cast<Eigen::Index>(i), 2 * j) = static_cast<T>(std::sin(arg));
      out(static_cast<Eigen::Index>(i), 2 * j + 1) = static_cast<T>(std::cos(arg));
    }
  }
  return out;
}

template <typename T>
ValueEncoderParams<T> ValueEncoderParams<T>::zeros(int sinusoid_dim, int hidden_dim, int model_dim) {
  ValueEncoderParams p;
  p.w1 = Mat<T>::Zero(hidden_dim, sinusoid_dim);
  p.b1 = Mat<T>::Zero(1, hidden_dim);
  p.w2 = Mat<T>::Zero(model_dim, hidden_dim);
  p.b2 = Mat<T>::Zero(1, model_dim);
  p.pos_emb = Mat<T>::Zero(kValueTokenCount, model_dim);
  return p;
}

template <typename T>
ValueEncoderParams<T> ValueEncoderParams<T>::random(int sinusoid_dim, int hidden_dim, int model_dim, Rng& rng) {
  ValueEncoderParams p = zeros(sinusoid_dim, hidden_dim, model_dim);
  auto fill = [&](Mat<T>& m, double stddev) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(stddev * rng.normal());
  };
  fill(p.w1, 1.0 / std::sqrt(static_cast<double>(sinusoid_dim)));
  fill(p.w2, 1.0 / std::sqrt(static_cast<double>(hidden_dim)));
  fill(p.pos_emb, 0.02);
  return p;
}

template <typename T>
TensorList<T> ValueEncoderParams<T>::tensors() {
  TensorList<T> out;
  for (const auto& [name, member] : members()) out.push_back({std::string(name), &(this->*member)});
  return out;
}

template <typename T>
void ValueEncoderParams<T>::validate(const SinusoidSpec& spec) const {
  spec.validate();
  const bool ok = w1.cols() == spec.dim && b1.rows() == 1 && b1.cols() == w1.rows() &&
                  w2.cols() == w1.rows() && b2.rows() == 1 && b2.cols() == w2.rows() &&
                  pos_emb.rows() == kValueTokenCount && pos_emb.cols() == w2.rows();
  if (!ok) throw ContractError("value encoder parameter shapes are inconsistent");
}

template <typename T>
void ValueEncoderParams<T>::set_zero() {
  for (auto& t : tensors()) t.value->setZero();
}

template <typename T>
EncoderBatch<T> encode_batch(std::span<const double> values, const ValueEncoderParams<T>& params,
                             const SinusoidSpec& spec) {
  params.validate(spec);
  EncoderBatch<T> c;
  c.sin = sinusoid_rows<T>(values, spec);
  c.pre.noalias() = c.sin * params.w1.transpose();
  add_row(c.pre, params.b1);
  c.act = silu(c.pre);
  c.h.noalias() = c.act * params.w2.transpose();
  add_row(c.h, params.b2);
  return c;
}

template <typename T>
void encode_batch_backward(const EncoderBatch<T>& cache, const ValueEncoderParams<T>& params,
                           const Mat<T>& grad_h, const Mat<T>& grad_pos, ValueEncoderParams<T>& grads) {
  if (grad_h.rows() != cache.h.rows() || grad_h.cols() != cache.h.cols() ||
      grad_pos.rows() != kValueTokenCount || grad_pos.cols() != params.pos_emb.cols()) {
    throw ContractError("value encoder upstream gradient has the wrong shape");
  }
  grads.pos_emb += grad_pos;
  grads.w2.noalias() += grad_h.transpose() * cache.act;
  grads.b2 += column_sums(grad_h);
  Mat<T> grad_act = grad_h * params.w2;
  const Mat<T> grad_pre =
      grad_act.cwiseProduct(cache.pre.unaryExpr([](T v) { return silu_grad(v); }));
  grads.w1.noalias() += grad_pre.transpose() * cache.sin;
  grads.b1 += column_sums(grad_pre);
}

template <typename T>
Mat<T> encode(double value, const ValueEncoderParams<T>& params, const SinusoidSpec& spec) {
  const EncoderBatch<T> c = encode_batch(std::span(&value, 1), params, spec);
  Mat<T> tokens = params.pos_emb;
  add_row(tokens, c.h);
  return tokens;
}

template <typename T>
ValueEncoderParams<T> encode_backward(double value, const ValueEncoderParams<T>& params,
                                      const SinusoidSpec& spec, const Mat<T>& upstream) {
  if (upstream.rows() != kValueTokenCount || upstream.cols() != params.model_dim()) {
    throw ContractError("upstream gradient must be 32 x model_dim");
  }
  const EncoderBatch<T> c = encode_batch(std::span(&value, 1), params, spec);
  ValueEncoderParams<T> grads =
      ValueEncoderParams<T>::zeros(params.sinusoid_dim(), params.hidden_dim(), params.model_dim());
  encode_batch_backward(c, params, Mat<T>(column_sums(upstream)), upstream, grads);
  return grads;
}

template <typename T>
Mat<T> compose(std::span<const Mat<T>> sequences) {
  if (sequences.empty()) throw ContractError("compose: no token sequences");
  const Eigen::Index cols = sequences.front().cols();
  Eigen::Index rows = 0;
  for (const Mat<T>& s : sequences) {
    if (s.cols() != cols) throw ContractError("compose: sequences disagree on model_dim");
    rows += s.rows();
  }
  Mat<T> out(rows, cols);
  Eigen::Index r = 0;
  for (const Mat<T>& s : sequences) {
    out.middleRows(r, s.rows()) = s;
    r += s.rows();
  }
  return out;
}

#define ATTRICTRL_INSTANTIATE(T)                                                                   \
  template Mat<T> sinusoid<T>(double, const SinusoidSpec&);                                        \
  template Mat<T> sinusoid_rows<T>(std::span<const double>, const SinusoidSpec&);                  \
  template struct ValueEncoderParams<T>;                                                           \
  template EncoderBatch<T> encode_batch<T>(std::span<const double>, const ValueEncoderParams<T>&,  \
                                           const SinusoidSpec&);                                   \
  template void encode_batch_backward<T>(const EncoderBatch<T>&, const ValueEncoderParams<T>&,     \
                                         const Mat<T>&, const Mat<T>&, ValueEncoderParams<T>&);    \
  template Mat<T> encode<T>(double, const ValueEncoderParams<T>&, const SinusoidSpec&);            \
  template ValueEncoderParams<T> encode_backward<T>(double, const ValueEncoderParams<T>&,          \
                                                    const SinusoidSpec&, const Mat<T>&);           \
  template Mat<T> compose<T>(std::span<const Mat<T>>);

ATTRICTRL_INSTANTIATE(float)
ATTRICTRL_INSTANTIATE(double)

#undef ATTRICTRL_INSTANTIATE

}  // namespace attrictrl
