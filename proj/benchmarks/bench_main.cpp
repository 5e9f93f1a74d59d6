#include <benchmark/benchmark.h>

#include "attrictrl/embedding.hpp"
#include "attrictrl/metrics.hpp"
#include "attrictrl/model.hpp"
#include "attrictrl/sampler.hpp"
#include "attrictrl/synth.hpp"
#include "attrictrl/trainer.hpp"
#include "attrictrl/value_mapping.hpp"

using namespace attrictrl;

namespace {

Image test_image() {
  SynthSpec s;
  s.shape = ShapeClass::Blobs;
  s.detail_knob = 32;
  s.seed = 1;
  return generate(s);
}

ModelConfig default_model(int attributes) {
  ModelConfig mc;
  mc.attributes = {AttributeKind::Brightness};
  if (attributes > 1) mc.attributes.push_back(AttributeKind::Detail);
  return mc;
}

PreparedBatch<float> batch_for(const ModelConfig& mc, int size, Rng& rng) {
  PreparedBatch<float> b;
  b.z0.resize(size, mc.denoiser.pixels());
  b.eps.resize(size, mc.denoiser.pixels());
  for (Eigen::Index i = 0; i < b.z0.size(); ++i) {
    b.z0.data()[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
    b.eps.data()[i] = static_cast<float>(rng.normal());
  }
  b.intensities = Mat<double>::Constant(size, static_cast<Eigen::Index>(mc.attributes.size()), 0.5);
  for (int i = 0; i < size; ++i) {
    b.timesteps.push_back(i * 6 % 200);
    b.classes.push_back(i % 4);
  }
  return b;
}

}  // namespace

static void BM_Brightness(benchmark::State& state) {
  const Image img = test_image();
  for (auto _ : state) benchmark::DoNotOptimize(brightness(img).value);
}
BENCHMARK(BM_Brightness);

static void BM_Detail(benchmark::State& state) {
  const Image img = test_image();
  for (auto _ : state) benchmark::DoNotOptimize(detail(img).value);
}
BENCHMARK(BM_Detail);

static void BM_SyntheticEmbedding(benchmark::State& state) {
  const Image img = test_image();
  const SyntheticEmbedder emb;
  for (auto _ : state) benchmark::DoNotOptimize(emb.embed_image(img));
}
BENCHMARK(BM_SyntheticEmbedding);

static void BM_RankNormalize(benchmark::State& state) {
  Rng rng(1);
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (auto& x : v) x = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(rank_normalize(v));
}
BENCHMARK(BM_RankNormalize)->Arg(5000)->Arg(50000);

static void BM_LossForward(benchmark::State& state) {
  const ModelConfig mc = default_model(static_cast<int>(state.range(1)));
  Rng rng(2);
  const auto model = AttriCtrlModel<float>::random(mc, rng);
  const auto batch = batch_for(mc, static_cast<int>(state.range(0)), rng);
  const NoiseSchedule sched = NoiseSchedule::linear();
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad(model, sched, batch));
}
BENCHMARK(BM_LossForward)->Args({32, 1})->Args({32, 2})->Unit(benchmark::kMillisecond);

static void BM_LossForwardBackward(benchmark::State& state) {
  const ModelConfig mc = default_model(static_cast<int>(state.range(1)));
  Rng rng(3);
  const auto model = AttriCtrlModel<float>::random(mc, rng);
  auto grads = AttriCtrlModel<float>::zeros(mc);
  const auto batch = batch_for(mc, static_cast<int>(state.range(0)), rng);
  const NoiseSchedule sched = NoiseSchedule::linear();
  for (auto _ : state) {
    grads.set_zero();
    benchmark::DoNotOptimize(loss_and_grad(model, sched, batch, &grads));
  }
}
BENCHMARK(BM_LossForwardBackward)->Args({32, 1})->Args({32, 2})->Unit(benchmark::kMillisecond);

static void BM_TrainStep(benchmark::State& state) {
  const ModelConfig mc = default_model(1);
  Rng rng(4);
  TrainConfig tc;
  tc.seed = 4;
  Trainer<float> trainer(AttriCtrlModel<float>::random(mc, rng), NoiseSchedule::linear(), tc);
  const auto batch = batch_for(mc, tc.batch_size, rng);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.apply(batch));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

static void BM_Sample32(benchmark::State& state) {
  const ModelConfig mc = default_model(1);
  Rng rng(5);
  const auto model = AttriCtrlModel<float>::random(mc, rng);
  std::vector<SampleRequest> reqs;
  for (int i = 0; i < 32; ++i) reqs.push_back({i % 4, {0.5}, static_cast<std::uint64_t>(i)});
  const NoiseSchedule sched = NoiseSchedule::linear();
  for (auto _ : state) benchmark::DoNotOptimize(sample_batch<float>(model, sched, reqs));
}
BENCHMARK(BM_Sample32)->Unit(benchmark::kMillisecond)->Iterations(2);

BENCHMARK_MAIN();
