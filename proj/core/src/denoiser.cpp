#include "attrictrl/denoiser.hpp"

#include <cmath>
#include <string>

#include "attrictrl/error.hpp"
#include "attrictrl/value_encoder.hpp"

namespace attrictrl {

void DenoiserConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("denoiser config: ") + what);
  };
  require(image_size > 0 && patch > 0 && image_size % patch == 0, "image_size must be a positive multiple of patch");
  require(channels == 1 || channels == 3, "channels must be 1 or 3");
  require(model_dim > 0 && heads > 0 && model_dim % heads == 0, "model_dim must be divisible by heads");
  require(mlp_hidden > 0, "mlp_hidden must be positive");
  require(time_dim > 0 && time_dim % 2 == 0, "time_dim must be positive and even");
  require(num_classes > 0 && class_tokens > 0, "num_classes and class_tokens must be positive");
}

nlohmann::json to_json(const DenoiserConfig& c) {
  return {{"image_size", c.image_size}, {"channels", c.channels},     {"patch", c.patch},
          {"model_dim", c.model_dim},   {"heads", c.heads},           {"mlp_hidden", c.mlp_hidden},
          {"time_dim", c.time_dim},     {"num_classes", c.num_classes}, {"class_tokens", c.class_tokens}};
}

DenoiserConfig denoiser_config_from_json(const nlohmann::json& j) {
  DenoiserConfig c;
  c.image_size = j.value("image_size", c.image_size);
  c.channels = j.value("channels", c.channels);
  c.patch = j.value("patch", c.patch);
  c.model_dim = j.value("model_dim", c.model_dim);
  c.heads = j.value("heads", c.heads);
  c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
  c.time_dim = j.value("time_dim", c.time_dim);
  c.num_classes = j.value("num_classes", c.num_classes);
  c.class_tokens = j.value("class_tokens", c.class_tokens);
  c.validate();
  return c;
}

template <typename T>
DenoiserParams<T> DenoiserParams<T>::zeros(const DenoiserConfig& cfg) {
  cfg.validate();
  const int d = cfg.model_dim;
  DenoiserParams p;
  p.w_in = Mat<T>::Zero(d, cfg.patch_dim());
  p.b_in = Mat<T>::Zero(1, d);
  p.pos = Mat<T>::Zero(cfg.patches(), d);
  p.w_time = Mat<T>::Zero(d, cfg.time_dim);
  p.b_time = Mat<T>::Zero(1, d);
  p.class_emb = Mat<T>::Zero(cfg.num_classes * cfg.class_tokens, d);
  p.wq = Mat<T>::Zero(d, d);
  p.wk = Mat<T>::Zero(d, d);
  p.wv = Mat<T>::Zero(d, d);
  p.wo = Mat<T>::Zero(d, d);
  p.bo = Mat<T>::Zero(1, d);
  p.w1 = Mat<T>::Zero(cfg.mlp_hidden, d);
  p.b1 = Mat<T>::Zero(1, cfg.mlp_hidden);
  p.w2 = Mat<T>::Zero(d, cfg.mlp_hidden);
  p.b2 = Mat<T>::Zero(1, d);
  p.w_out = Mat<T>::Zero(cfg.patch_dim(), d);
  p.b_out = Mat<T>::Zero(1, cfg.patch_dim());
  return p;
}

template <typename T>
DenoiserParams<T> DenoiserParams<T>::random(const DenoiserConfig& cfg, Rng& rng) {
  DenoiserParams p = zeros(cfg);
  auto fill = [&](Mat<T>& m, double stddev) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(stddev * rng.normal());
  };
  auto fan_in = [&](Mat<T>& m) { fill(m, 1.0 / std::sqrt(static_cast<double>(m.cols()))); };
  fan_in(p.w_in);
  fill(p.pos, 0.02);
  fan_in(p.w_time);
  fill(p.class_emb, 0.02);
  fan_in(p.wq);
  fan_in(p.wk);
  fan_in(p.wv);
  fan_in(p.wo);
  fan_in(p.w1);
  fan_in(p.w2);
  fan_in(p.w_out);
  return p;
}

template <typename T>
TensorList<T> DenoiserParams<T>::tensors() {
  TensorList<T> out;
  for (const auto& [name, member] : members()) out.push_back({std::string(name), &(this->*member)});
  return out;
}

template <typename T>
void DenoiserParams<T>::check(const DenoiserConfig& cfg) const {
  const DenoiserParams<T> shape = zeros(cfg);
  for (const auto& [name, member] : members()) {
    if ((this->*member).rows() != (shape.*member).rows() || (this->*member).cols() != (shape.*member).cols()) {
      throw ContractError("denoiser parameter '" + std::string(name) + "' has the wrong shape");
    }
  }
}

template <typename T>
Mat<T> patchify(const DenoiserConfig& cfg, const Mat<T>& images) {
  if (images.cols() != cfg.pixels()) throw ContractError("image tensor width does not match the denoiser config");
  const int side = cfg.image_size, ps = cfg.patch, pps = cfg.patches_per_side(), P = cfg.patches();
  Mat<T> out(images.rows() * P, cfg.patch_dim());
  for (Eigen::Index b = 0; b < images.rows(); ++b) {
    for (int py = 0; py < pps; ++py) {
      for (int px = 0; px < pps; ++px) {
        const Eigen::Index row = b * P + py * pps + px;
        int f = 0;
        for (int c = 0; c < cfg.channels; ++c) {
          for (int iy = 0; iy < ps; ++iy) {
            for (int ix = 0; ix < ps; ++ix) {
              const int y = py * ps + iy, x = px * ps + ix;
              out(row, f++) = images(b, (c * side + y) * side + x);
            }
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
Mat<T> unpatchify(const DenoiserConfig& cfg, const Mat<T>& tokens, int batch) {
  const int side = cfg.image_size, ps = cfg.patch, pps = cfg.patches_per_side(), P = cfg.patches();
  if (tokens.rows() != static_cast<Eigen::Index>(batch) * P || tokens.cols() != cfg.patch_dim()) {
    throw ContractError("patch tensor shape does not match the denoiser config");
  }
  Mat<T> out(batch, cfg.pixels());
  for (int b = 0; b < batch; ++b) {
    for (int py = 0; py < pps; ++py) {
      for (int px = 0; px < pps; ++px) {
        const Eigen::Index row = static_cast<Eigen::Index>(b) * P + py * pps + px;
        int f = 0;
        for (int c = 0; c < cfg.channels; ++c) {
          for (int iy = 0; iy < ps; ++iy) {
            for (int ix = 0; ix < ps; ++ix) {
              const int y = py * ps + iy, x = px * ps + ix;
              out(b, (c * side + y) * side + x) = tokens(row, f++);
            }
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
CondProjection<T> project_conditioning(const DenoiserConfig& cfg, const DenoiserParams<T>& params,
                                       const Mat<T>& cond, int batch) {
  if (batch <= 0 || cond.rows() % batch != 0 || cond.cols() != cfg.model_dim) {
    throw ContractError("conditioning tensor shape does not match batch and model_dim");
  }
  CondProjection<T> proj;
  proj.length = static_cast<int>(cond.rows() / batch);
  proj.k.noalias() = cond * params.wk.transpose();
  proj.v.noalias() = cond * params.wv.transpose();
  return proj;
}

template <typename T>
Mat<T> denoise_batch(const DenoiserConfig& cfg, const DenoiserParams<T>& params, const Mat<T>& z_t,
                     std::span<const int> timesteps, const CondProjection<T>& cond,
                     DenoiserCache<T>* cache) {
  const int B = static_cast<int>(z_t.rows());
  const int P = cfg.patches(), d = cfg.model_dim, H = cfg.heads, dh = cfg.head_dim(), L = cond.length;
  if (static_cast<int>(timesteps.size()) != B) throw ContractError("one timestep per batch element is required");
  if (cond.k.rows() != static_cast<Eigen::Index>(B) * L || L <= 0) {
    throw ContractError("conditioning batch does not match the image batch");
  }

  DenoiserCache<T> local;
  DenoiserCache<T>& c = cache != nullptr ? *cache : local;

  c.x = patchify(cfg, z_t);
  std::vector<double> tvals(timesteps.begin(), timesteps.end());
  c.time_sin = sinusoid_rows<T>(tvals, SinusoidSpec{cfg.time_dim, 10000.0});
  Mat<T> temb = c.time_sin * params.w_time.transpose();
  add_row(temb, params.b_time);

  c.h0.noalias() = c.x * params.w_in.transpose();
  add_row(c.h0, params.b_in);
  for (int b = 0; b < B; ++b) {
    auto block = c.h0.middleRows(static_cast<Eigen::Index>(b) * P, P);
    block += params.pos;
    block.rowwise() += temb.row(b);
  }

  c.q.noalias() = c.h0 * params.wq.transpose();
  c.o.resize(c.h0.rows(), d);
  c.probs.resize(static_cast<std::size_t>(B) * H);
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  for (int b = 0; b < B; ++b) {
    for (int h = 0; h < H; ++h) {
      const auto qh = c.q.block(static_cast<Eigen::Index>(b) * P, h * dh, P, dh);
      const auto kh = cond.k.block(static_cast<Eigen::Index>(b) * L, h * dh, L, dh);
      const auto vh = cond.v.block(static_cast<Eigen::Index>(b) * L, h * dh, L, dh);
      Mat<T>& a = c.probs[static_cast<std::size_t>(b) * H + h];
      a.noalias() = (qh * kh.transpose()) * scale;
      for (int i = 0; i < P; ++i) {
        auto row = a.row(i);
        row.array() -= row.maxCoeff();
        row = row.array().exp().matrix();
        row /= row.sum();
      }
      c.o.block(static_cast<Eigen::Index>(b) * P, h * dh, P, dh).noalias() = a * vh;
    }
  }

  c.h1 = c.h0;
  c.h1.noalias() += c.o * params.wo.transpose();
  add_row(c.h1, params.bo);

  c.u.noalias() = c.h1 * params.w1.transpose();
  add_row(c.u, params.b1);
  c.h2 = c.h1;
  c.h2.noalias() += silu(c.u) * params.w2.transpose();
  add_row(c.h2, params.b2);

  Mat<T> y = c.h2 * params.w_out.transpose();
  add_row(y, params.b_out);
  return unpatchify(cfg, y, B);
}

template <typename T>
Mat<T> denoise_batch_backward(const DenoiserConfig& cfg, const DenoiserParams<T>& params,
                              const DenoiserCache<T>& c, const Mat<T>& cond,
                              const CondProjection<T>& proj, const Mat<T>& grad_eps,
                              DenoiserParams<T>& grads) {
  const int B = static_cast<int>(grad_eps.rows());
  const int P = cfg.patches(), H = cfg.heads, dh = cfg.head_dim(), L = proj.length;

  const Mat<T> dy = patchify(cfg, grad_eps);
  grads.w_out.noalias() += dy.transpose() * c.h2;
  grads.b_out += column_sums(dy);
  const Mat<T> dh2 = dy * params.w_out;

  // h2 = h1 + silu(u) w2^T + b2
  const Mat<T> g = silu(c.u);
  grads.w2.noalias() += dh2.transpose() * g;
  grads.b2 += column_sums(dh2);
  const Mat<T> du = (dh2 * params.w2).cwiseProduct(c.u.unaryExpr([](T v) { return silu_grad(v); }));
  grads.w1.noalias() += du.transpose() * c.h1;
  grads.b1 += column_sums(du);
  Mat<T> dh1 = dh2;
  dh1.noalias() += du * params.w1;

  // h1 = h0 + o wo^T + bo
  grads.wo.noalias() += dh1.transpose() * c.o;
  grads.bo += column_sums(dh1);
  const Mat<T> d_o = dh1 * params.wo;

  Mat<T> dq(c.q.rows(), c.q.cols());
  Mat<T> dk = Mat<T>::Zero(proj.k.rows(), proj.k.cols());
  Mat<T> dv = Mat<T>::Zero(proj.v.rows(), proj.v.cols());
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  for (int b = 0; b < B; ++b) {
    for (int h = 0; h < H; ++h) {
      const Eigen::Index pr = static_cast<Eigen::Index>(b) * P, lr = static_cast<Eigen::Index>(b) * L;
      const Mat<T>& a = c.probs[static_cast<std::size_t>(b) * H + h];
      const auto doh = d_o.block(pr, h * dh, P, dh);
      const auto qh = c.q.block(pr, h * dh, P, dh);
      const auto kh = proj.k.block(lr, h * dh, L, dh);
      const auto vh = proj.v.block(lr, h * dh, L, dh);
      const Mat<T> da = doh * vh.transpose();
      dv.block(lr, h * dh, L, dh).noalias() += a.transpose() * doh;
      Mat<T> ds = a.cwiseProduct(da);
      const Eigen::Matrix<T, Eigen::Dynamic, 1> row_dot = ds.rowwise().sum();
      ds = a.cwiseProduct(da.colwise() - row_dot) * scale;
      dq.block(pr, h * dh, P, dh).noalias() = ds * kh;
      dk.block(lr, h * dh, L, dh).noalias() += ds.transpose() * qh;
    }
  }

  grads.wq.noalias() += dq.transpose() * c.h0;
  grads.wk.noalias() += dk.transpose() * cond;
  grads.wv.noalias() += dv.transpose() * cond;
  Mat<T> dcond = dk * params.wk;
  dcond.noalias() += dv * params.wv;

  Mat<T> dh0 = dh1;
  dh0.noalias() += dq * params.wq;

  // h0 = x w_in^T + b_in + pos[p] + temb[b]
  grads.w_in.noalias() += dh0.transpose() * c.x;
  grads.b_in += column_sums(dh0);
  Mat<T> dtemb(B, cfg.model_dim);
  for (int b = 0; b < B; ++b) {
    const auto block = dh0.middleRows(static_cast<Eigen::Index>(b) * P, P);
    grads.pos += block;
    dtemb.row(b) = block.colwise().sum();
  }
  grads.w_time.noalias() += dtemb.transpose() * c.time_sin;
  grads.b_time += column_sums(dtemb);
  return dcond;
}

template <typename T>
Mat<T> denoise(const DenoiserConfig& cfg, const DenoiserParams<T>& params, const Mat<T>& z_t,
               const Mat<T>& cond, int t) {
  if (z_t.rows() != 1) throw ContractError("denoise expects a single image row");
  const CondProjection<T> proj = project_conditioning(cfg, params, cond, 1);
  const int ts[1] = {t};
  return denoise_batch(cfg, params, z_t, ts, proj);
}

#define ATTRICTRL_INSTANTIATE(T)                                                                       \
  template struct DenoiserParams<T>;                                                                   \
  template CondProjection<T> project_conditioning<T>(const DenoiserConfig&, const DenoiserParams<T>&, \
                                                     const Mat<T>&, int);                             \
  template Mat<T> denoise_batch<T>(const DenoiserConfig&, const DenoiserParams<T>&, const Mat<T>&,     \
                                   std::span<const int>, const CondProjection<T>&, DenoiserCache<T>*); \
  template Mat<T> denoise_batch_backward<T>(const DenoiserConfig&, const DenoiserParams<T>&,           \
                                            const DenoiserCache<T>&, const Mat<T>&,                    \
                                            const CondProjection<T>&, const Mat<T>&,                   \
                                            DenoiserParams<T>&);                                       \
  template Mat<T> denoise<T>(const DenoiserConfig&, const DenoiserParams<T>&, const Mat<T>&,           \
                             const Mat<T>&, int);                                                      \
  template Mat<T> patchify<T>(const DenoiserConfig&, const Mat<T>&);                                   \
  template Mat<T> unpatchify<T>(const DenoiserConfig&, const Mat<T>&, int);

ATTRICTRL_INSTANTIATE(float)
ATTRICTRL_INSTANTIATE(double)

#undef ATTRICTRL_INSTANTIATE

}  // namespace attrictrl
