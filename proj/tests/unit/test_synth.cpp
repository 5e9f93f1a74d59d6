#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "attrictrl/embedding.hpp"
#include "attrictrl/error.hpp"
#include "attrictrl/hash.hpp"
#include "attrictrl/io.hpp"
#include "attrictrl/manifest.hpp"
#include "attrictrl/metrics.hpp"
#include "attrictrl/png_io.hpp"
#include "attrictrl/synth.hpp"
#include "attrictrl/value_mapping.hpp"
#include "support.hpp"

using namespace attrictrl;

TEST_CASE("shape class names round trip") {
  for (ShapeClass c : {ShapeClass::Stripes, ShapeClass::Checker, ShapeClass::Blobs, ShapeClass::Flat}) {
    CHECK(parse_shape_class(to_string(c)) == c);
  }
  CHECK_THROWS_AS(parse_shape_class("spiral"), ConfigError);
}

TEST_CASE("knob zero is dark") {
  for (ShapeClass c : {ShapeClass::Stripes, ShapeClass::Checker, ShapeClass::Blobs, ShapeClass::Flat}) {
    // The dark end only has room for a couple of dozen distinct levels.
    for (int k : {1, 2, 4, 8, 16, 24}) {
      SynthSpec s;
      s.shape = c;
      s.brightness_knob = 0.0;
      s.detail_knob = k;
      s.seed = static_cast<std::uint64_t>(k);
      CHECK(brightness(generate(s)).value < 0.05);
    }
  }
}

TEST_CASE("equiprobable levels give exactly ln k") {
  for (ShapeClass c : {ShapeClass::Stripes, ShapeClass::Checker, ShapeClass::Blobs, ShapeClass::Flat}) {
    for (int k : {1, 2, 4, 8, 16, 32, 64, 128, 256}) {
      SynthSpec s;
      s.shape = c;
      s.detail_knob = k;
      s.brightness_knob = 0.5;
      s.seed = 7;
      CHECK(std::abs(detail(generate(s)).value - std::log(static_cast<double>(k))) < 1e-9);
    }
  }
  SynthSpec s;
  s.detail_knob = 4;
  CHECK(detail(generate(s)).value == doctest::Approx(1.386294).epsilon(1e-6));
}

TEST_CASE("generation is deterministic and validated") {
  SynthSpec s;
  s.shape = ShapeClass::Blobs;
  s.detail_knob = 13;
  s.brightness_knob = 0.4;
  s.unsafe = true;
  s.seed = 5;
  CHECK(generate(s) == generate(s));
  CHECK(encode_image(generate(s)) == encode_image(generate(s)));
  SynthSpec other = s;
  other.seed = 6;
  CHECK(generate(s) != generate(other));
  CHECK(synth_spec_from_json(to_json(s)) == s);

  SynthSpec bad = s;
  bad.detail_knob = 0;
  CHECK_THROWS_AS(bad.validate(), ContractError);
  bad = s;
  bad.brightness_knob = 1.1;
  CHECK_THROWS_AS(bad.validate(), ContractError);
  bad = s;
  bad.width = 4;
  CHECK_THROWS_AS(bad.validate(), ContractError);
}

TEST_CASE("level step") {
  CHECK(level_step(1) == 0);
  CHECK(level_step(2) == 16);
  CHECK(level_step(256) == 1);
  for (int k = 2; k <= 256; ++k) CHECK((k - 1) * level_step(k) <= 255);
}

TEST_CASE("brightness knob is rank-faithful") {
  CorpusConfig cfg;
  cfg.seed = 3;
  std::vector<double> knobs, measured;
  for (int i = 0; i < 500; ++i) {
    SynthSpec s = corpus_spec(cfg, i);
    s.brightness_knob = (i + 0.5) / 500.0;
    knobs.push_back(s.brightness_knob);
    measured.push_back(brightness(generate(s)).value);
  }
  CHECK(spearman(knobs, measured) >= 0.99);
}

TEST_CASE("uniform knobs span the brightness range") {
  CorpusConfig cfg;
  cfg.seed = 11;
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double b = brightness(generate(corpus_spec(cfg, i))).value;
    lo = std::min(lo, b);
    hi = std::max(hi, b);
  }
  CHECK(lo <= 0.05);
  CHECK(hi >= 0.95);
}

TEST_CASE("unsafe images are separable under the synthetic embedder") {
  const SyntheticEmbedder emb;
  const std::vector<double> concept_vec = emb.unsafe_concept();
  CorpusConfig cfg;
  cfg.seed = 17;
  cfg.unsafe_fraction = 0.5;
  double max_safe = -2.0, min_unsafe = 2.0;
  int unsafe_count = 0;
  const SafetyConcept sc(concept_vec);
  for (int i = 0; i < 400; ++i) {
    const SynthSpec s = corpus_spec(cfg, i);
    const Image img = generate(s);
    const double cos = cosine_similarity(emb.embed_image(img), concept_vec);
    if (s.unsafe) {
      ++unsafe_count;
      min_unsafe = std::min(min_unsafe, cos);
      CHECK(safety(img, emb, sc).value < 0.0);
    } else {
      max_safe = std::max(max_safe, cos);
      CHECK(safety(img, emb, sc).value > 0.0);
    }
  }
  CHECK(unsafe_count > 150);
  CHECK(unsafe_count < 250);
  CHECK(min_unsafe > max_safe);
}

TEST_CASE("corpus files and manifest") {
  support::TempDir dir("corpus");
  CorpusConfig cfg;
  cfg.count = 100;
  cfg.seed = 9;
  const auto manifest_path = generate_corpus(cfg, dir.path() / "a");
  const Manifest m = read_manifest(manifest_path);
  REQUIRE(m.rows.size() == 100);
  for (const auto& row : m.rows) {
    const auto file = manifest_path.parent_path() / row.path;
    REQUIRE(std::filesystem::exists(file));
    CHECK(row.spec.has_value());
    CHECK(read_png(file) == generate(synth_spec_from_json(*row.spec)));
  }
  verify_manifest(m, manifest_path.parent_path());
  const auto again = generate_corpus(cfg, dir.path() / "b");
  CHECK(sha256_hex(read_file(manifest_path)) == sha256_hex(read_file(again)));
  cfg.count = 0;
  CHECK_THROWS_AS(generate_corpus(cfg, dir.path() / "c"), ConfigError);
}
