#include <doctest.h>

#include <cmath>

#include "attrictrl/checkpoint.hpp"
#include "attrictrl/error.hpp"
#include "attrictrl/eval.hpp"
#include "attrictrl/manifest.hpp"
#include "attrictrl/metrics.hpp"
#include "attrictrl/pipeline.hpp"
#include "attrictrl/png_io.hpp"
#include "attrictrl/synth.hpp"
#include "support.hpp"

using namespace attrictrl;

namespace {

Image flat_gray(int size, int level) {
  Image img(size, size);
  const auto v = static_cast<std::uint8_t>(level);
  for (auto& p : img.pixels()) p = {v, v, v};
  return img;
}

ModelConfig brightness_model() {
  ModelConfig mc;
  mc.attributes = {AttributeKind::Brightness};
  return mc;
}

}  // namespace

TEST_CASE("avg_diff examples and properties") {
  const std::vector<SweepPair> same = {{0.2, 0.2, 0}, {0.8, 0.8, 0}};
  CHECK(avg_diff(same) == 0.0);
  const std::vector<SweepPair> far = {{0.0, 1.0, 0}};
  CHECK(avg_diff(far) == 1.0);
  CHECK_THROWS_AS(avg_diff(std::vector<SweepPair>{}), ContractError);

  Rng rng(31);
  std::vector<SweepPair> uni;
  for (int i = 0; i < 100000; ++i) uni.push_back({rng.uniform(), rng.uniform(), 0});
  CHECK(std::abs(avg_diff(uni) - 1.0 / 3.0) < 0.01);

  std::vector<SweepPair> few(uni.begin(), uni.begin() + 50);
  const double a = avg_diff(few);
  double worst = 0.0;
  for (const auto& p : few) worst = std::max(worst, std::abs(p.target - p.result));
  CHECK(a >= 0.0);
  CHECK(a <= worst);
  std::reverse(few.begin(), few.end());
  CHECK(avg_diff(few) == doctest::Approx(a).epsilon(1e-15));
}

TEST_CASE("removal rate") {
  CHECK(removal_rate(10, 0) == 1.0);
  CHECK(removal_rate(10, 2) == doctest::Approx(0.8));
  CHECK(removal_rate(10, 15) == doctest::Approx(-0.5));
  for (long n = 1; n < 50; ++n) {
    CHECK(removal_rate(n, n) == 0.0);
    CHECK(removal_rate(n, 0) == 1.0);
  }
  CHECK_THROWS_AS(removal_rate(0, 3), UndefinedRateError);
}

TEST_CASE("target spearman uses per-target means") {
  const std::vector<SweepPair> p = {{0.1, 0.2, 0}, {0.1, 0.0, 1}, {0.5, 0.3, 2}, {0.9, 0.95, 3}};
  CHECK(target_spearman(p) == doctest::Approx(1.0));
  const std::vector<SweepPair> rev = {{0.1, 0.9, 0}, {0.5, 0.5, 1}, {0.9, 0.1, 2}};
  CHECK(target_spearman(rev) == doctest::Approx(-1.0));
}

TEST_CASE("sweep requests are deterministic and cover the grid") {
  ModelConfig mc = brightness_model();
  mc.attributes.push_back(AttributeKind::Detail);
  SweepConfig cfg;
  cfg.samples_per_target = 3;
  cfg.seed = 4;
  const auto r = sweep_requests(mc, AttributeKind::Detail, cfg);
  REQUIRE(r.size() == 27);
  CHECK(r[0].intensities[1] == 0.1);
  CHECK(r[26].intensities[1] == 0.9);
  for (const auto& q : r) {
    CHECK(q.class_id < mc.denoiser.num_classes);
    CHECK(std::find(cfg.targets.begin(), cfg.targets.end(), q.intensities[0]) != cfg.targets.end());
  }
  const auto again = sweep_requests(mc, AttributeKind::Detail, cfg);
  CHECK(again[5].seed == r[5].seed);
  CHECK(again[5].intensities == r[5].intensities);
  CHECK(r[0].seed != r[1].seed);
  CHECK_THROWS_AS(sweep_requests(mc, AttributeKind::Safety, cfg), ConfigError);
}

TEST_CASE("an oracle generator closes the loop exactly") {
  // Five raw levels rank-normalize to 0.1, 0.3, 0.5, 0.7, 0.9.
  const std::vector<int> levels = {10, 60, 110, 160, 210};
  std::vector<double> raws;
  for (int l : levels) raws.push_back(l / 255.0);
  const MappingTable table = build_mapping_table(AttributeKind::Brightness, raws);
  SweepConfig cfg;
  cfg.targets = {0.1, 0.3, 0.5, 0.7, 0.9};
  cfg.samples_per_target = 4;
  const Generator oracle = [&](std::span<const SampleRequest> reqs) {
    std::vector<Image> out;
    for (const auto& q : reqs) {
      const auto idx = static_cast<std::size_t>(std::lround((q.intensities[0] - 0.1) / 0.2));
      out.push_back(flat_gray(32, levels[idx]));
    }
    return out;
  };
  const SweepResult r = run_sweep(oracle, brightness_model(), AttributeKind::Brightness, cfg, table, {});
  CHECK(r.pairs.size() == 20);
  CHECK(r.avg_diff == 0.0);
  CHECK(r.spearman == doctest::Approx(1.0));
}

TEST_CASE("checkpoint sweep needs a mapping table") {
  Checkpoint ck;
  Rng rng(32);
  ck.model = AttriCtrlModel<float>::random(brightness_model(), rng);
  ck.schedule = NoiseSchedule::linear(5);
  SweepConfig cfg;
  cfg.samples_per_target = 1;
  CHECK_THROWS_AS(run_sweep(ck, AttributeKind::Brightness, cfg, {}), ConfigError);
  CHECK_THROWS_AS(run_safety_eval(ck, 4, 1, {}), ConfigError);
}

TEST_CASE("safety evaluation counts unsafe outputs in paired runs") {
  ModelConfig mc = brightness_model();
  mc.attributes.push_back(AttributeKind::Safety);
  const PipelineConfig pc;
  const ScoringResources res(pc.embedder);
  // Safe (gray) images when the safety intensity is high, unsafe (red) ones
  // otherwise.
  const Generator gen = [&](std::span<const SampleRequest> reqs) {
    std::vector<Image> out;
    for (const auto& q : reqs) {
      SynthSpec s;
      s.seed = q.seed;
      s.unsafe = q.intensities[1] < 0.5;
      s.detail_knob = 4;
      out.push_back(generate(s));
      CHECK(q.intensities[0] == 0.5);
    }
    return out;
  };
  const SafetyEvalResult r = run_safety_eval(gen, mc, 30, 7, res.context());
  CHECK(r.n_o == 30);
  CHECK(r.n_s == 0);
  CHECK(r.rr == 1.0);
  const Generator none = [&](std::span<const SampleRequest> reqs) {
    return std::vector<Image>(reqs.size(), Image(32, 32));
  };
  const SafetyEvalResult z = run_safety_eval(none, mc, 5, 7, res.context());
  CHECK(z.n_o == 0);
  CHECK_FALSE(z.rr.has_value());
  CHECK(to_json(z)["rr"].is_null());
}

TEST_CASE("an untrained checkpoint is near the no-control baseline") {
  support::TempDir dir("untrained");
  CorpusConfig cc;
  cc.count = 1000;
  cc.seed = 33;
  const Manifest corpus = read_manifest(generate_corpus(cc, dir.path()));
  std::vector<double> raws;
  for (const auto& row : corpus.rows) raws.push_back(brightness(read_png(dir.path() / row.path)).value);
  const BinAssignment bins = assign_bins(raws, 10);
  std::vector<Record> recs;
  for (std::size_t i = 0; i < raws.size(); ++i) recs.push_back({std::to_string(i), raws[i]});
  std::vector<double> balanced;
  for (const auto& r : balance(recs, bins, 50, 1)) balanced.push_back(r.raw);

  // A single random draw can land anywhere from about 0.35 to 0.46, so the
  // check is on the mean over six initializations.
  double total = 0.0;
  const int draws = 6;
  for (int seed = 30; seed < 30 + draws; ++seed) {
    Checkpoint ck;
    Rng init = Rng::stream(static_cast<std::uint64_t>(seed), "init");
    ck.model = AttriCtrlModel<float>::random(brightness_model(), init);
    ck.schedule = NoiseSchedule::linear();
    ck.tables[AttributeKind::Brightness] = build_mapping_table(AttributeKind::Brightness, balanced);
    SweepConfig cfg;
    cfg.samples_per_target = 8;
    cfg.seed = static_cast<std::uint64_t>(seed);
    const SweepResult r = run_sweep(ck, AttributeKind::Brightness, cfg, {});
    MESSAGE("init seed " << seed << ": avg_diff " << r.avg_diff);
    total += r.avg_diff;
  }
  const double mean = total / draws;
  CHECK(mean >= 0.25);
  CHECK(mean <= 0.45);
}
