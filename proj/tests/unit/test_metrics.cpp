#include <doctest.h>

#include <cmath>
#include <numeric>

#include "attrictrl/embedding.hpp"
#include "attrictrl/error.hpp"
#include "attrictrl/metrics.hpp"
#include "support.hpp"

using namespace attrictrl;

namespace {

Image two_level(int w, int h, std::uint8_t a, std::uint8_t b) {
  Image img(w, h);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const std::uint8_t v = i % 2 == 0 ? a : b;
    img.pixels()[i] = {v, v, v};
  }
  return img;
}

// Provider whose image embedding is fixed and whose prompt embeddings are
// built to give chosen cosine similarities with it.
support::StubProvider stub_with_similarities(double sim_pos, double sim_neg) {
  const std::vector<double> e = {1.0, 0.0, 0.0};
  const std::vector<double> pos = {sim_pos, std::sqrt(1 - sim_pos * sim_pos), 0.0};
  const std::vector<double> neg = {sim_neg, 0.0, std::sqrt(1 - sim_neg * sim_neg)};
  return support::StubProvider(e, {{std::string(RealismPrompts::kPositive), pos},
                                   {std::string(RealismPrompts::kNegative), neg}});
}

}  // namespace

TEST_CASE("brightness exact cases") {
  CHECK(brightness(Image(4, 4, Rgb{0, 0, 0})).value == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(brightness(Image(4, 4, Rgb{255, 255, 255})).value - 1.0) < 1e-12);
  CHECK(std::abs(brightness(Image(4, 4, Rgb{255, 0, 0})).value - 1.0) < 1e-12);
  CHECK(brightness(Image(1, 1, Rgb{10, 200, 30})).kind == AttributeKind::Brightness);
}

TEST_CASE("detail exact cases") {
  CHECK(detail(Image(4, 4, Rgb{9, 9, 9})).value == 0.0);
  Image ramp(16, 16);
  for (int i = 0; i < 256; ++i) ramp.pixels()[i] = {static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(i),
                                                      static_cast<std::uint8_t>(i)};
  CHECK(std::abs(detail(ramp).value - std::log(256.0)) < 1e-9);
  CHECK(std::abs(detail(ramp).value - 5.545177444479562) < 1e-9);
  CHECK(std::abs(detail(two_level(4, 4, 10, 200)).value - std::log(2.0)) < 1e-9);
  for (int k : {3, 4, 5, 7, 16, 100}) {
    Image img(k, 4);
    for (int i = 0; i < k * 4; ++i) {
      const auto v = static_cast<std::uint8_t>(2 * (i % k));
      img.pixels()[i] = {v, v, v};
    }
    CHECK(std::abs(detail(img).value - std::log(static_cast<double>(k))) < 1e-9);
  }
}

TEST_CASE("metric properties over random images") {
  Rng rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    Image img = support::random_image(rng, 1 + static_cast<int>(rng.below(20)), 1 + static_cast<int>(rng.below(20)));
    const double b = brightness(img).value;
    const double d = detail(img).value;
    REQUIRE(b >= 0.0);
    REQUIRE(b <= 1.0);
    REQUIRE(d >= 0.0);
    REQUIRE(d <= std::log(256.0) + 1e-12);

    // Permuting pixels leaves both untouched.
    Image shuffled = img;
    rng.shuffle(shuffled.pixels());
    CHECK(brightness(shuffled).value == doctest::Approx(b).epsilon(1e-12));
    CHECK(detail(shuffled).value == doctest::Approx(d).epsilon(1e-12));
  }
}

TEST_CASE("detail ignores a bijective relabeling of gray levels") {
  Rng rng(11);
  std::vector<std::uint8_t> relabel(256);
  std::iota(relabel.begin(), relabel.end(), 0);
  rng.shuffle(std::span<std::uint8_t>(relabel));
  for (int trial = 0; trial < 50; ++trial) {
    Image img(12, 12);
    for (auto& p : img.pixels()) {
      const auto v = static_cast<std::uint8_t>(rng.below(256));
      p = {v, v, v};
    }
    Image mapped = img;
    for (auto& p : mapped.pixels()) p = {relabel[p.r], relabel[p.r], relabel[p.r]};
    CHECK(detail(mapped).value == doctest::Approx(detail(img).value).epsilon(1e-12));
  }
}

TEST_CASE("cosine similarity examples and errors") {
  const std::vector<double> x = {1, 0}, y = {0, 1}, xy = {1, 1};
  CHECK(cosine_similarity(x, x) == 1.0);
  CHECK(cosine_similarity(x, y) == 0.0);
  CHECK(std::abs(cosine_similarity(xy, x) - std::sqrt(2.0) / 2.0) < 1e-15);
  const std::vector<double> zero = {0, 0}, three = {1, 2, 3};
  CHECK_THROWS_AS(cosine_similarity(zero, x), DomainError);
  CHECK_THROWS_AS(cosine_similarity(x, three), ContractError);

  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(8), scaled(8), neg(8);
    const double lambda = rng.uniform(0.01, 100.0);
    for (int i = 0; i < 8; ++i) {
      a[i] = rng.normal();
      scaled[i] = lambda * a[i];
      neg[i] = -a[i];
    }
    CHECK(cosine_similarity(a, scaled) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine_similarity(a, neg) == doctest::Approx(-1.0).epsilon(1e-12));
  }
}

TEST_CASE("realism with stubbed embeddings") {
  const Image img(2, 2);
  const RealismPrompts prompts;
  CHECK(realism(img, stub_with_similarities(0.3, 0.1), prompts).value == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(realism(img, stub_with_similarities(1.0, 0.0), prompts).value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(realism(img, stub_with_similarities(0.4, 0.4), prompts).value == 0.0);
  CHECK(std::string(RealismPrompts::kPositive) == "a real photograph, realistic details and natural lighting");
  CHECK(std::string(RealismPrompts::kNegative) ==
        "a cartoon image, a human-created artistic representation, such as an illustration or painting");
}

TEST_CASE("safety with stubbed embeddings") {
  const std::vector<double> concept_vector = {1.0, 0.0};
  const SafetyConcept c(concept_vector, 0.25);
  auto at_similarity = [&](double s) {
    const std::vector<double> e = {s, std::sqrt(1 - s * s)};
    return safety_from_embedding(e, c);
  };
  CHECK(std::abs(at_similarity(0.25)) < 1e-15);
  CHECK(at_similarity(0.35) == doctest::Approx(-0.10).epsilon(1e-12));
  CHECK(at_similarity(0.05) == doctest::Approx(0.20).epsilon(1e-12));

  // Positive rescaling of the image embedding changes nothing.
  const std::vector<double> e = {0.6, 0.8}, e10 = {6.0, 8.0};
  CHECK(safety_from_embedding(e, c) == doctest::Approx(safety_from_embedding(e10, c)).epsilon(1e-14));
  const std::vector<double> p = {0.1, 0.9}, n = {0.8, -0.2};
  CHECK(realism_from_embeddings(e, p, n) == doctest::Approx(realism_from_embeddings(e10, p, n)).epsilon(1e-14));
}

TEST_CASE("safety concept validation") {
  CHECK_THROWS_AS(SafetyConcept({0.0, 0.0}), DomainError);
  CHECK_THROWS_AS(SafetyConcept({1.0, 0.0}, 0.0), ConfigError);
  CHECK_THROWS_AS(SafetyConcept({1.0, 0.0}, 1.0), ConfigError);
  const SafetyConcept c({3.0, 4.0});
  CHECK(c.vector()[0] == doctest::Approx(0.6));
  CHECK(c.threshold() == 0.25);
}

TEST_CASE("score_all agrees with the individual metrics") {
  const SyntheticEmbedder emb;
  const SafetyConcept c(emb.unsafe_concept());
  const RealismPrompts prompts;
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const Image img = support::random_image(rng, 8, 8);
    const ScoreMap all = score_all(img, emb, prompts, c);
    REQUIRE(all.size() == 4);
    CHECK(all.at(AttributeKind::Brightness).value == brightness(img).value);
    CHECK(all.at(AttributeKind::Detail).value == detail(img).value);
    CHECK(all.at(AttributeKind::Realism).value == realism(img, emb, prompts).value);
    CHECK(all.at(AttributeKind::Safety).value == safety(img, emb, c).value);
  }
  const ScoreMap black = score_all(Image(4, 4), emb, prompts, c);
  CHECK(black.at(AttributeKind::Brightness).value == 0.0);
  CHECK(black.at(AttributeKind::Detail).value == 0.0);
}

TEST_CASE("brightness and detail never need a provider") {
  const AttributeKind kinds[] = {AttributeKind::Brightness, AttributeKind::Detail};
  const ScoreMap s = score_attributes(Image(2, 2, Rgb{255, 255, 255}), kinds, nullptr, RealismPrompts(), nullptr);
  CHECK(s.at(AttributeKind::Brightness).value == 1.0);
  const AttributeKind needs[] = {AttributeKind::Realism};
  CHECK_THROWS_AS(score_attributes(Image(2, 2), needs, nullptr, RealismPrompts(), nullptr), ConfigError);
}

TEST_CASE("attribute names round trip") {
  for (AttributeKind k : kAllAttributes) CHECK(parse_attribute(to_string(k)) == k);
  CHECK_THROWS_AS(parse_attribute("sharpness"), ConfigError);
}
