#pragma once

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <string>

#include <unistd.h>

#include "attrictrl/embedding.hpp"
#include "attrictrl/image.hpp"
#include "attrictrl/model.hpp"
#include "attrictrl/rng.hpp"
#include "attrictrl/tensor.hpp"

namespace support {

inline attrictrl::Image random_image(attrictrl::Rng& rng, int w, int h) {
  attrictrl::Image img(w, h);
  for (auto& p : img.pixels()) {
    p = {static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)),
         static_cast<std::uint8_t>(rng.below(256))};
  }
  return img;
}

// Fresh directory under the build tree's temp area, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("attrictrl-test-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Embedding provider returning fixed vectors, for exact metric cases.
class StubProvider final : public attrictrl::EmbeddingProvider {
 public:
  StubProvider(std::vector<double> image, std::map<std::string, std::vector<double>> texts)
      : image_(std::move(image)), texts_(std::move(texts)) {}
  std::size_t dimension() const noexcept override { return image_.size(); }
  std::vector<double> embed_image(const attrictrl::Image&) const override { return image_; }
  std::vector<double> embed_text(std::string_view text) const override { return texts_.at(std::string(text)); }

 private:
  std::vector<double> image_;
  std::map<std::string, std::vector<double>> texts_;
};

// Norm-wise relative error between an analytic gradient and central
// differences of f over every entry of x.
template <typename F>
double gradient_error(attrictrl::Mat<double>& x, const attrictrl::Mat<double>& analytic, F&& f, double h = 1e-6) {
  double diff2 = 0.0, num2 = 0.0, ana2 = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double& v = x.data()[i];
    const double saved = v;
    v = saved + h;
    const double fp = f();
    v = saved - h;
    const double fm = f();
    v = saved;
    const double num = (fp - fm) / (2.0 * h);
    const double ana = analytic.data()[i];
    diff2 += (num - ana) * (num - ana);
    num2 += num * num;
    ana2 += ana * ana;
  }
  const double scale = std::sqrt(std::max(num2, ana2));
  return scale < 1e-300 ? std::sqrt(diff2) : std::sqrt(diff2) / scale;
}

// Small model used by gradient and training tests: 8x8 RGB images, patch 4,
// model_dim 8.
inline attrictrl::ModelConfig tiny_model_config(std::vector<attrictrl::AttributeKind> attrs = {
                                                    attrictrl::AttributeKind::Brightness}) {
  attrictrl::ModelConfig mc;
  mc.denoiser.image_size = 8;
  mc.denoiser.channels = 3;
  mc.denoiser.patch = 4;
  mc.denoiser.model_dim = 8;
  mc.denoiser.heads = 2;
  mc.denoiser.mlp_hidden = 12;
  mc.denoiser.time_dim = 8;
  mc.denoiser.num_classes = 2;
  mc.denoiser.class_tokens = 2;
  mc.value_sinusoid.dim = 8;
  mc.encoder_hidden = 8;
  mc.attributes = std::move(attrs);
  return mc;
}

// Every parameter drawn from N(0, scale^2), biases included.
template <typename T>
attrictrl::AttriCtrlModel<T> dense_random_model(const attrictrl::ModelConfig& mc, attrictrl::Rng& rng,
                                                double scale = 0.5) {
  auto m = attrictrl::AttriCtrlModel<T>::zeros(mc);
  for (auto& t : m.tensors()) {
    for (Eigen::Index i = 0; i < t.value->size(); ++i) t.value->data()[i] = static_cast<T>(scale * rng.normal());
  }
  return m;
}

template <typename T>
attrictrl::PreparedBatch<T> random_batch(const attrictrl::ModelConfig& mc, int steps, int batch,
                                         attrictrl::Rng& rng) {
  attrictrl::PreparedBatch<T> b;
  const int px = mc.denoiser.pixels();
  b.z0.resize(batch, px);
  b.eps.resize(batch, px);
  for (Eigen::Index i = 0; i < b.z0.size(); ++i) {
    b.z0.data()[i] = static_cast<T>(rng.uniform(-1.0, 1.0));
    b.eps.data()[i] = static_cast<T>(rng.normal());
  }
  b.intensities.resize(batch, static_cast<Eigen::Index>(mc.attributes.size()));
  for (int i = 0; i < batch; ++i) {
    b.timesteps.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(steps))));
    b.classes.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(mc.denoiser.num_classes))));
    for (Eigen::Index a = 0; a < b.intensities.cols(); ++a) b.intensities(i, a) = rng.uniform();
  }
  return b;
}

}  // namespace support
