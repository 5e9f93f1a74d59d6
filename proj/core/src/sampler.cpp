#include "attrictrl/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "attrictrl/error.hpp"
#include "attrictrl/trainer.hpp"

namespace attrictrl {

namespace {

// Requests are denoised in fixed-size groups. The grouping depends only on
// request order, which keeps results independent of any outer scheduling.
constexpr std::size_t kChunk = 32;

template <typename T>
void sample_chunk(const AttriCtrlModel<T>& model, const NoiseSchedule& sched,
                  std::span<const SampleRequest> reqs, std::vector<Image>& out) {
  const DenoiserConfig& dc = model.config.denoiser;
  const int B = static_cast<int>(reqs.size());
  const int pixels = dc.pixels();
  const int k = static_cast<int>(model.config.attributes.size());

  std::vector<int> classes;
  Mat<double> intensities(B, k);
  std::vector<Rng> rngs;
  for (int b = 0; b < B; ++b) {
    const SampleRequest& r = reqs[static_cast<std::size_t>(b)];
    if (static_cast<int>(r.intensities.size()) != k) throw ContractError("request intensity count does not match the model");
    for (int a = 0; a < k; ++a) {
      const double v = r.intensities[static_cast<std::size_t>(a)];
      if (!(v >= 0.0 && v <= 1.0)) throw ContractError("intensities must lie in [0,1]");
      intensities(b, a) = v;
    }
    classes.push_back(r.class_id);
    rngs.push_back(Rng::stream(r.seed, "sampler"));
  }

  const Mat<T> cond = build_conditioning(model, classes, intensities);
  const CondProjection<T> proj = project_conditioning(dc, model.denoiser, cond, B);

  Mat<T> x(B, pixels);
  for (int b = 0; b < B; ++b) {
    for (int p = 0; p < pixels; ++p) x(b, p) = static_cast<T>(rngs[static_cast<std::size_t>(b)].normal());
  }

  std::vector<int> ts(static_cast<std::size_t>(B));
  for (int t = sched.steps() - 1; t >= 0; --t) {
    std::fill(ts.begin(), ts.end(), t);
    const Mat<T> eps_hat = denoise_batch(dc, model.denoiser, x, ts, proj);
    const double ab = sched.alpha_bar(t);
    const double ab_prev = sched.alpha_bar_prev(t);
    const double beta = sched.beta(t);
    const T inv_sqrt_ab = static_cast<T>(1.0 / std::sqrt(ab));
    const T sqrt_1m_ab = static_cast<T>(std::sqrt(1.0 - ab));
    const T c_x0 = static_cast<T>(std::sqrt(ab_prev) * beta / (1.0 - ab));
    const T c_xt = static_cast<T>(std::sqrt(sched.alpha(t)) * (1.0 - ab_prev) / (1.0 - ab));
    const T sigma = static_cast<T>(std::sqrt(sched.posterior_variance(t)));

    Mat<T> x0 = ((x - sqrt_1m_ab * eps_hat) * inv_sqrt_ab).cwiseMax(T(-1)).cwiseMin(T(1));
    x = c_x0 * x0 + c_xt * x;
    if (t > 0) {
      for (int b = 0; b < B; ++b) {
        Rng& rng = rngs[static_cast<std::size_t>(b)];
        for (int p = 0; p < pixels; ++p) x(b, p) += sigma * static_cast<T>(rng.normal());
      }
    }
  }

  for (int b = 0; b < B; ++b) {
    std::vector<float> row(static_cast<std::size_t>(pixels));
    for (int p = 0; p < pixels; ++p) row[static_cast<std::size_t>(p)] = static_cast<float>(x(b, p));
    out.push_back(tensor_to_image(row, dc.image_size, dc.channels));
  }
}

}  // namespace

std::vector<double> intensity_vector(const ModelConfig& cfg, const std::map<AttributeKind, double>& intensities) {
  std::vector<double> out;
  for (AttributeKind a : cfg.attributes) {
    auto it = intensities.find(a);
    if (it == intensities.end()) {
      throw ContractError("missing intensity for conditioned attribute '" + std::string(to_string(a)) + "'");
    }
    if (!(it->second >= 0.0 && it->second <= 1.0)) throw ContractError("intensities must lie in [0,1]");
    out.push_back(it->second);
  }
  if (intensities.size() != cfg.attributes.size()) {
    throw ContractError("intensity given for an attribute the model is not conditioned on");
  }
  return out;
}

template <typename T>
std::vector<Image> sample_batch(const AttriCtrlModel<T>& model, const NoiseSchedule& sched,
                                std::span<const SampleRequest> requests) {
  std::vector<Image> out;
  out.reserve(requests.size());
  for (std::size_t i = 0; i < requests.size(); i += kChunk) {
    sample_chunk(model, sched, requests.subspan(i, std::min(kChunk, requests.size() - i)), out);
  }
  return out;
}

template <typename T>
Image sample(const AttriCtrlModel<T>& model, int class_id, const std::map<AttributeKind, double>& intensities,
             const NoiseSchedule& sched, std::uint64_t seed) {
  const SampleRequest req{class_id, intensity_vector(model.config, intensities), seed};
  return sample_batch(model, sched, std::span<const SampleRequest>(&req, 1)).front();
}

template std::vector<Image> sample_batch<float>(const AttriCtrlModel<float>&, const NoiseSchedule&,
                                                std::span<const SampleRequest>);
template std::vector<Image> sample_batch<double>(const AttriCtrlModel<double>&, const NoiseSchedule&,
                                                 std::span<const SampleRequest>);
template Image sample<float>(const AttriCtrlModel<float>&, int, const std::map<AttributeKind, double>&,
                             const NoiseSchedule&, std::uint64_t);
template Image sample<double>(const AttriCtrlModel<double>&, int, const std::map<AttributeKind, double>&,
                              const NoiseSchedule&, std::uint64_t);

}  // namespace attrictrl
