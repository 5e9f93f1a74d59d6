#include "attrictrl/model.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "attrictrl/error.hpp"

namespace attrictrl {

void ModelConfig::validate() const {
  denoiser.validate();
  value_sinusoid.validate();
  if (encoder_hidden <= 0) throw ConfigError("encoder_hidden must be positive");
  if (attributes.empty()) throw ConfigError("at least one conditioned attribute is required");
  std::set<AttributeKind> seen(attributes.begin(), attributes.end());
  if (seen.size() != attributes.size()) throw ConfigError("conditioned attributes must be distinct");
}

nlohmann::json to_json(const ModelConfig& cfg) {
  nlohmann::json attrs = nlohmann::json::array();
  for (AttributeKind a : cfg.attributes) attrs.push_back(std::string(to_string(a)));
  return {{"denoiser", to_json(cfg.denoiser)},
          {"value_sinusoid", {{"dim", cfg.value_sinusoid.dim}, {"base", cfg.value_sinusoid.base}}},
          {"encoder_hidden", cfg.encoder_hidden},
          {"attributes", attrs}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.denoiser = denoiser_config_from_json(j.value("denoiser", nlohmann::json::object()));
  if (j.contains("value_sinusoid")) {
    cfg.value_sinusoid.dim = j["value_sinusoid"].value("dim", cfg.value_sinusoid.dim);
    cfg.value_sinusoid.base = j["value_sinusoid"].value("base", cfg.value_sinusoid.base);
  }
  cfg.encoder_hidden = j.value("encoder_hidden", 4 * cfg.value_sinusoid.dim);
  for (const auto& a : j.value("attributes", nlohmann::json::array())) {
    cfg.attributes.push_back(parse_attribute(a.get<std::string>()));
  }
  cfg.validate();
  return cfg;
}

template <typename T>
AttriCtrlModel<T> AttriCtrlModel<T>::zeros(const ModelConfig& cfg) {
  cfg.validate();
  AttriCtrlModel m;
  m.config = cfg;
  m.denoiser = DenoiserParams<T>::zeros(cfg.denoiser);
  for (std::size_t i = 0; i < cfg.attributes.size(); ++i) {
    m.encoders.push_back(ValueEncoderParams<T>::zeros(cfg.value_sinusoid.dim, cfg.encoder_hidden,
                                                      cfg.denoiser.model_dim));
  }
  return m;
}

template <typename T>
AttriCtrlModel<T> AttriCtrlModel<T>::random(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  AttriCtrlModel m;
  m.config = cfg;
  m.denoiser = DenoiserParams<T>::random(cfg.denoiser, rng);
  for (std::size_t i = 0; i < cfg.attributes.size(); ++i) {
    m.encoders.push_back(ValueEncoderParams<T>::random(cfg.value_sinusoid.dim, cfg.encoder_hidden,
                                                       cfg.denoiser.model_dim, rng));
  }
  return m;
}

template <typename T>
TensorList<T> AttriCtrlModel<T>::tensors() {
  TensorList<T> out;
  for (auto& t : denoiser.tensors()) out.push_back({"denoiser/" + t.name, t.value});
  for (std::size_t i = 0; i < encoders.size(); ++i) {
    const std::string prefix = "encoder/" + std::string(to_string(config.attributes[i])) + "/";
    for (auto& t : encoders[i].tensors()) out.push_back({prefix + t.name, t.value});
  }
  return out;
}

template <typename T>
std::size_t AttriCtrlModel<T>::parameter_count() const {
  std::size_t n = 0;
  for (auto& t : const_cast<AttriCtrlModel*>(this)->tensors()) n += static_cast<std::size_t>(t.value->size());
  return n;
}

template <typename T>
void AttriCtrlModel<T>::set_zero() {
  for (auto& t : tensors()) t.value->setZero();
}

template <typename T>
template <typename U>
AttriCtrlModel<U> AttriCtrlModel<T>::cast() const {
  AttriCtrlModel<U> out = AttriCtrlModel<U>::zeros(config);
  auto src = const_cast<AttriCtrlModel*>(this)->tensors();
  auto dst = out.tensors();
  for (std::size_t i = 0; i < src.size(); ++i) *dst[i].value = src[i].value->template cast<U>();
  return out;
}

template <typename T>
Mat<T> build_conditioning(const AttriCtrlModel<T>& model, std::span<const int> classes,
                          const Mat<double>& intensities, ConditioningCache<T>* cache) {
  const ModelConfig& cfg = model.config;
  const int B = static_cast<int>(classes.size());
  const int k = static_cast<int>(cfg.attributes.size());
  const int ct = cfg.denoiser.class_tokens;
  const int L = cfg.conditioning_length();
  if (intensities.rows() != B || intensities.cols() != k) {
    throw ContractError("intensity matrix must be batch x attribute-count");
  }
  for (int c : classes) {
    if (c < 0 || c >= cfg.denoiser.num_classes) throw ContractError("class id " + std::to_string(c) + " out of range");
  }

  ConditioningCache<T> local;
  ConditioningCache<T>& cc = cache != nullptr ? *cache : local;
  cc.encoders.clear();
  for (int a = 0; a < k; ++a) {
    std::vector<double> values(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) values[static_cast<std::size_t>(b)] = intensities(b, a);
    cc.encoders.push_back(encode_batch(std::span<const double>(values), model.encoders[static_cast<std::size_t>(a)],
                                       cfg.value_sinusoid));
  }

  Mat<T> cond(static_cast<Eigen::Index>(B) * L, cfg.denoiser.model_dim);
  for (int b = 0; b < B; ++b) {
    const Eigen::Index base = static_cast<Eigen::Index>(b) * L;
    cond.middleRows(base, ct) = model.denoiser.class_emb.middleRows(static_cast<Eigen::Index>(classes[b]) * ct, ct);
    for (int a = 0; a < k; ++a) {
      auto block = cond.middleRows(base + ct + static_cast<Eigen::Index>(a) * kValueTokenCount, kValueTokenCount);
      block = model.encoders[static_cast<std::size_t>(a)].pos_emb;
      block.rowwise() += cc.encoders[static_cast<std::size_t>(a)].h.row(b);
    }
  }
  return cond;
}

template <typename T>
void conditioning_backward(const AttriCtrlModel<T>& model, const ConditioningCache<T>& cache,
                           std::span<const int> classes, const Mat<T>& grad_cond, AttriCtrlModel<T>& grads) {
  const ModelConfig& cfg = model.config;
  const int B = static_cast<int>(classes.size());
  const int k = static_cast<int>(cfg.attributes.size());
  const int ct = cfg.denoiser.class_tokens;
  const int L = cfg.conditioning_length();
  const int d = cfg.denoiser.model_dim;

  for (int b = 0; b < B; ++b) {
    grads.denoiser.class_emb.middleRows(static_cast<Eigen::Index>(classes[b]) * ct, ct) +=
        grad_cond.middleRows(static_cast<Eigen::Index>(b) * L, ct);
  }
  for (int a = 0; a < k; ++a) {
    Mat<T> grad_h(B, d);
    Mat<T> grad_pos = Mat<T>::Zero(kValueTokenCount, d);
    for (int b = 0; b < B; ++b) {
      const auto block = grad_cond.middleRows(
          static_cast<Eigen::Index>(b) * L + ct + static_cast<Eigen::Index>(a) * kValueTokenCount, kValueTokenCount);
      grad_pos += block;
      grad_h.row(b) = block.colwise().sum();
    }
    encode_batch_backward(cache.encoders[static_cast<std::size_t>(a)], model.encoders[static_cast<std::size_t>(a)],
                          grad_h, grad_pos, grads.encoders[static_cast<std::size_t>(a)]);
  }
}

template <typename T>
double loss_and_grad(const AttriCtrlModel<T>& model, const NoiseSchedule& sched,
                     const PreparedBatch<T>& batch, AttriCtrlModel<T>* grads, Mat<T>* grad_cond) {
  const DenoiserConfig& dc = model.config.denoiser;
  const int B = batch.size();
  if (B == 0) throw ContractError("empty training batch");
  if (batch.z0.cols() != dc.pixels() || batch.eps.rows() != B || batch.eps.cols() != dc.pixels() ||
      static_cast<int>(batch.timesteps.size()) != B || static_cast<int>(batch.classes.size()) != B) {
    throw ContractError("prepared batch shapes are inconsistent");
  }

  Mat<T> z_t(B, dc.pixels());
  for (int b = 0; b < B; ++b) {
    const int t = batch.timesteps[static_cast<std::size_t>(b)];
    sched.check_timestep(t);
    const T a = static_cast<T>(std::sqrt(sched.alpha_bar(t)));
    const T s = static_cast<T>(std::sqrt(1.0 - sched.alpha_bar(t)));
    z_t.row(b) = a * batch.z0.row(b) + s * batch.eps.row(b);
  }

  ConditioningCache<T> ccache;
  const Mat<T> cond = build_conditioning(model, batch.classes, batch.intensities, &ccache);
  const CondProjection<T> proj = project_conditioning(dc, model.denoiser, cond, B);
  DenoiserCache<T> dcache;
  const Mat<T> eps_hat = denoise_batch(dc, model.denoiser, z_t, batch.timesteps, proj, &dcache);

  const Mat<T> diff = eps_hat - batch.eps;
  const double count = static_cast<double>(diff.size());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < diff.size(); ++i) {
    const double v = static_cast<double>(diff.data()[i]);
    loss += v * v;
  }
  loss /= count;

  if (grads != nullptr || grad_cond != nullptr) {
    AttriCtrlModel<T> scratch;
    AttriCtrlModel<T>* g = grads;
    if (g == nullptr) {
      scratch = AttriCtrlModel<T>::zeros(model.config);
      g = &scratch;
    }
    const Mat<T> grad_eps = diff * static_cast<T>(2.0 / count);
    const Mat<T> dcond = denoise_batch_backward(dc, model.denoiser, dcache, cond, proj, grad_eps, g->denoiser);
    conditioning_backward(model, ccache, batch.classes, dcond, *g);
    if (grad_cond != nullptr) *grad_cond = dcond;
  }
  return loss;
}

#define ATTRICTRL_INSTANTIATE(T)                                                                        \
  template struct AttriCtrlModel<T>;                                                                    \
  template Mat<T> build_conditioning<T>(const AttriCtrlModel<T>&, std::span<const int>,                 \
                                        const Mat<double>&, ConditioningCache<T>*);                     \
  template void conditioning_backward<T>(const AttriCtrlModel<T>&, const ConditioningCache<T>&,         \
                                         std::span<const int>, const Mat<T>&, AttriCtrlModel<T>&);      \
  template double loss_and_grad<T>(const AttriCtrlModel<T>&, const NoiseSchedule&,                      \
                                   const PreparedBatch<T>&, AttriCtrlModel<T>*, Mat<T>*);

ATTRICTRL_INSTANTIATE(float)
ATTRICTRL_INSTANTIATE(double)

template AttriCtrlModel<float> AttriCtrlModel<double>::cast<float>() const;
template AttriCtrlModel<double> AttriCtrlModel<float>::cast<double>() const;
template AttriCtrlModel<float> AttriCtrlModel<float>::cast<float>() const;
template AttriCtrlModel<double> AttriCtrlModel<double>::cast<double>() const;

#undef ATTRICTRL_INSTANTIATE

}  // namespace attrictrl
