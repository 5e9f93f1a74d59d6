#include <doctest.h>

#include <chrono>
#include <cmath>

#include "attrictrl/error.hpp"
#include "attrictrl/sampler.hpp"
#include "attrictrl/synth.hpp"
#include "attrictrl/trainer.hpp"
#include "support.hpp"

using namespace attrictrl;

namespace {

TrainingSet random_set(const ModelConfig& mc, int n, Rng& rng) {
  TrainingSet set;
  set.images.resize(n, mc.denoiser.pixels());
  set.intensities.resize(n, static_cast<Eigen::Index>(mc.attributes.size()));
  for (int i = 0; i < n; ++i) {
    const Image img = support::random_image(rng, mc.denoiser.image_size, mc.denoiser.image_size);
    const std::vector<float> x = image_to_tensor(img, mc.denoiser.channels);
    set.images.row(i) = Eigen::Map<const Mat<float>>(x.data(), 1, static_cast<Eigen::Index>(x.size()));
    set.classes.push_back(i % mc.denoiser.num_classes);
    for (Eigen::Index a = 0; a < set.intensities.cols(); ++a) set.intensities(i, a) = rng.uniform();
  }
  return set;
}

TrainConfig small_train(std::uint64_t seed) {
  TrainConfig tc;
  tc.batch_size = 4;
  tc.steps = 5;
  tc.seed = seed;
  return tc;
}

}  // namespace

TEST_CASE("image tensor conversion") {
  Image img(2, 2);
  img.at(0, 0) = {0, 255, 128};
  img.at(1, 0) = {255, 0, 0};
  const std::vector<float> x = image_to_tensor(img, 3);
  REQUIRE(x.size() == 12);
  // Channel-planar: R plane, then G, then B.
  CHECK(x[0] == -1.0f);
  CHECK(x[1] == 1.0f);
  CHECK(x[4] == 1.0f);
  CHECK(x[5] == -1.0f);
  CHECK(x[8] == doctest::Approx(128 / 127.5 - 1));
  const Image back = tensor_to_image(x, 2, 3);
  CHECK(back == img);
  const std::vector<float> gray_in = image_to_tensor(img, 1);
  CHECK(gray_in.size() == 4);
  const std::vector<float> wild = {-7.0f, 9.0f, 0.0f, 0.0f};
  const Image gray = tensor_to_image(wild, 2, 1);
  CHECK(gray.at(0, 0).r == 0);
  CHECK(gray.at(1, 0).g == 255);
  CHECK_THROWS_AS(image_to_tensor(Image(2, 3), 3), ContractError);
}

TEST_CASE("oracle noise prediction gives zero loss") {
  // With all-zero parameters the prediction is identically zero, so a batch
  // whose true noise is zero is predicted exactly.
  const ModelConfig mc = support::tiny_model_config();
  const NoiseSchedule sched = NoiseSchedule::linear(20, 1e-3, 0.2);
  Rng rng(21);
  auto batch = support::random_batch<double>(mc, sched.steps(), 3, rng);
  batch.eps.setZero();
  CHECK(loss_and_grad(AttriCtrlModel<double>::zeros(mc), sched, batch) == 0.0);
  batch.eps.setOnes();
  CHECK(loss_and_grad(AttriCtrlModel<double>::zeros(mc), sched, batch) == doctest::Approx(1.0));
}

TEST_CASE("a small step descends on a fixed batch") {
  const ModelConfig mc = support::tiny_model_config();
  const NoiseSchedule sched = NoiseSchedule::linear(20, 1e-3, 0.2);
  Rng rng(22);
  TrainConfig tc = small_train(1);
  tc.learning_rate = 1e-5;
  Trainer<double> trainer(AttriCtrlModel<double>::random(mc, rng), sched, tc);
  const auto batch = support::random_batch<double>(mc, sched.steps(), 8, rng);
  const double before = trainer.apply(batch);
  const double after = loss_and_grad(trainer.model(), sched, batch);
  CHECK(after <= before);
  CHECK(trainer.step() == 1);
}

TEST_CASE("training is bit-identical under a fixed seed") {
  const ModelConfig mc = support::tiny_model_config({AttributeKind::Brightness, AttributeKind::Detail});
  const NoiseSchedule sched = NoiseSchedule::linear(20, 1e-3, 0.2);
  Rng data_rng(23);
  const TrainingSet set = random_set(mc, 10, data_rng);
  auto run = [&](std::uint64_t seed) {
    Rng init = Rng::stream(seed, "init");
    Trainer<float> t(AttriCtrlModel<float>::random(mc, init), sched, small_train(seed));
    return t.fit(set);
  };
  const auto a = run(5), b = run(5), c = run(6);
  REQUIRE(a.size() == 5);
  CHECK(a == b);
  CHECK(a != c);
  for (double l : a) CHECK(std::isfinite(l));
}

TEST_CASE("training updates both the denoiser and the encoders") {
  const ModelConfig mc = support::tiny_model_config();
  const NoiseSchedule sched = NoiseSchedule::linear(20, 1e-3, 0.2);
  Rng rng(24);
  const TrainingSet set = random_set(mc, 6, rng);
  const auto start = AttriCtrlModel<float>::random(mc, rng);
  Trainer<float> t(start, sched, small_train(2));
  t.fit(set);
  CHECK(t.model().denoiser.w_in != start.denoiser.w_in);
  CHECK(t.model().encoders[0].w1 != start.encoders[0].w1);
  CHECK(t.model().encoders[0].pos_emb != start.encoders[0].pos_emb);
}

TEST_CASE("non-finite loss raises a divergence error") {
  const ModelConfig mc = support::tiny_model_config();
  const NoiseSchedule sched = NoiseSchedule::linear(20, 1e-3, 0.2);
  Rng rng(25);
  auto model = AttriCtrlModel<float>::random(mc, rng);
  model.denoiser.b_out(0, 0) = std::numeric_limits<float>::infinity();
  Trainer<float> t(model, sched, small_train(3));
  const TrainingSet set = random_set(mc, 4, rng);
  try {
    t.train_step(set);
    FAIL("expected divergence");
  } catch (const TrainingDivergenceError& e) {
    CHECK(e.step() == 1);
    CHECK(e.exit_code() == ExitCode::kDivergence);
  }
}

TEST_CASE("invalid training inputs are rejected") {
  const ModelConfig mc = support::tiny_model_config();
  TrainConfig tc;
  tc.batch_size = 0;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
  tc = TrainConfig{};
  tc.optimizer = "sgd";
  CHECK_THROWS_AS(tc.validate(), ConfigError);
  CHECK(train_config_from_json(to_json(TrainConfig{})).learning_rate == TrainConfig{}.learning_rate);
  Rng rng(26);
  TrainingSet set = random_set(mc, 3, rng);
  set.intensities(0, 0) = 1.5;
  CHECK_THROWS_AS(set.validate(mc), ContractError);
}

TEST_CASE("sampling is deterministic and independent of batching") {
  const ModelConfig mc = support::tiny_model_config({AttributeKind::Brightness, AttributeKind::Detail});
  const NoiseSchedule sched = NoiseSchedule::linear(20, 1e-3, 0.2);
  Rng rng(27);
  const auto m = AttriCtrlModel<float>::random(mc, rng);
  const std::map<AttributeKind, double> v = {{AttributeKind::Brightness, 0.3}, {AttributeKind::Detail, 0.7}};
  const Image a = sample(m, 1, v, sched, 99);
  CHECK(a == sample(m, 1, v, sched, 99));
  CHECK(a != sample(m, 1, v, sched, 100));
  std::vector<SampleRequest> reqs;
  for (int i = 0; i < 40; ++i) reqs.push_back({i % 2, {0.3, 0.7}, static_cast<std::uint64_t>(90 + i)});
  const auto imgs = sample_batch<float>(m, sched, reqs);
  REQUIRE(imgs.size() == 40);
  CHECK(imgs[9] == a);
  CHECK_THROWS_AS(intensity_vector(mc, {{AttributeKind::Brightness, 0.3}}), ContractError);
  CHECK_THROWS_AS(intensity_vector(mc, {{AttributeKind::Brightness, 0.3}, {AttributeKind::Detail, 1.2}}),
                  ContractError);
}

TEST_CASE("single-image training reproduces the image") {
  ModelConfig mc;
  mc.attributes = {AttributeKind::Brightness};
  SynthSpec spec;
  spec.shape = ShapeClass::Blobs;
  spec.brightness_knob = 0.6;
  spec.detail_knob = 8;
  spec.seed = 3;
  const Image target = generate(spec);
  const std::vector<float> x = image_to_tensor(target, mc.denoiser.channels);
  TrainingSet set;
  set.images = Eigen::Map<const Mat<float>>(x.data(), 1, static_cast<Eigen::Index>(x.size()));
  set.classes = {2};
  set.intensities = Mat<double>::Constant(1, 1, 0.5);

  TrainConfig tc;
  tc.batch_size = 8;
  tc.steps = 1500;
  tc.learning_rate = 2e-3;
  tc.seed = 4;
  const auto t0 = std::chrono::steady_clock::now();
  Rng init = Rng::stream(tc.seed, "init");
  Trainer<float> trainer(AttriCtrlModel<float>::random(mc, init), NoiseSchedule::linear(), tc);
  trainer.fit(set);
  const Image out = sample(trainer.model(), 2, {{AttributeKind::Brightness, 0.5}}, trainer.schedule(), 8);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::vector<float> y = image_to_tensor(out, mc.denoiser.channels);
  double mse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mse += (x[i] - y[i]) * (x[i] - y[i]);
  mse /= static_cast<double>(x.size());
  MESSAGE("single-image MSE " << mse << " in " << seconds << " s");
  CHECK(mse <= 0.05);
  CHECK(seconds <= 120.0);
}
