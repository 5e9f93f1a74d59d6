#include <doctest.h>

#include <cmath>

#include "attrictrl/error.hpp"
#include "attrictrl/value_encoder.hpp"
#include "support.hpp"

using namespace attrictrl;

namespace {

template <typename T>
ValueEncoderParams<T> scaled_random(int d, int hidden, int model, Rng& rng) {
  ValueEncoderParams<T> p = ValueEncoderParams<T>::random(d, hidden, model, rng);
  // Non-zero biases and larger positions so every term is exercised.
  for (auto& t : p.tensors()) {
    for (Eigen::Index i = 0; i < t.value->size(); ++i) t.value->data()[i] = static_cast<T>(rng.normal());
  }
  return p;
}

double dot(const Mat<double>& a, const Mat<double>& b) { return (a.array() * b.array()).sum(); }

}  // namespace

TEST_CASE("sinusoid examples") {
  const Mat<double> zero = sinusoid<double>(0.0, SinusoidSpec{});
  REQUIRE(zero.cols() == 64);
  for (int j = 0; j < 32; ++j) {
    CHECK(zero(0, 2 * j) == 0.0);
    CHECK(zero(0, 2 * j + 1) == 1.0);
  }
  const Mat<double> one = sinusoid<double>(1.0, SinusoidSpec{2, 10000.0});
  CHECK(one(0, 0) == doctest::Approx(0.841471).epsilon(1e-6));
  CHECK(one(0, 1) == doctest::Approx(0.540302).epsilon(1e-6));
  CHECK_THROWS_AS(sinusoid<double>(0.5, SinusoidSpec{3, 10000.0}), ConfigError);
  CHECK_THROWS_AS(sinusoid<double>(0.5, SinusoidSpec{4, 1.0}), ConfigError);
}

TEST_CASE("sinusoid squared norm is half the dimension") {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const double v = rng.uniform(-2.0, 3.0);
    CHECK(sinusoid<double>(v, SinusoidSpec{}).squaredNorm() == doctest::Approx(32.0).epsilon(1e-13));
  }
}

TEST_CASE("encode structural examples") {
  const SinusoidSpec spec{8, 10000.0};
  ValueEncoderParams<double> p = ValueEncoderParams<double>::zeros(8, 16, 6);
  CHECK(encode(0.3, p, spec).isZero(0.0));
  Rng rng(2);
  p.pos_emb = Mat<double>::Random(kValueTokenCount, 6);
  CHECK(encode(0.3, p, spec) == p.pos_emb);
  CHECK(encode(0.9, p, spec) == p.pos_emb);

  p = scaled_random<double>(8, 16, 6, rng);
  for (double v : {0.0, 0.25, 1.0}) {
    const Mat<double> tok = encode(v, p, spec);
    REQUIRE(tok.rows() == kValueTokenCount);
    for (int i = 0; i < kValueTokenCount; ++i) {
      const Mat<double> diff = tok.row(i) - tok.row(0);
      const Mat<double> expect = p.pos_emb.row(i) - p.pos_emb.row(0);
      CHECK((diff - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  ValueEncoderParams<double> bad = p;
  bad.w1 = Mat<double>::Zero(16, 4);
  CHECK_THROWS_AS(encode(0.5, bad, spec), ContractError);
}

TEST_CASE("encode is continuous on a fine grid") {
  Rng rng(3);
  const SinusoidSpec spec{};
  const ValueEncoderParams<double> p = ValueEncoderParams<double>::random(64, 256, 64, rng);
  const int n = 1000;
  std::vector<double> steps;
  Mat<double> prev = encode(0.0, p, spec);
  for (int i = 1; i <= n; ++i) {
    const Mat<double> cur = encode(static_cast<double>(i) / n, p, spec);
    steps.push_back((cur - prev).norm());
    prev = cur;
  }
  for (std::size_t i = 1; i < steps.size(); ++i) CHECK(steps[i] <= 100.0 * std::max(steps[i - 1], 1e-12));
}

TEST_CASE("encode_backward examples") {
  Rng rng(4);
  const SinusoidSpec spec{4, 10000.0};
  const ValueEncoderParams<double> p = scaled_random<double>(4, 3, 2, rng);
  const ValueEncoderParams<double> g0 = encode_backward(0.4, p, spec, Mat<double>(Mat<double>::Zero(kValueTokenCount, 2)));
  for (auto& t : const_cast<ValueEncoderParams<double>&>(g0).tensors()) CHECK(t.value->isZero(0.0));
  const Mat<double> up = Mat<double>::Random(kValueTokenCount, 2);
  const ValueEncoderParams<double> g = encode_backward(0.4, p, spec, up);
  CHECK(g.pos_emb == up);
  CHECK_THROWS_AS(encode_backward(0.4, p, spec, Mat<double>(Mat<double>::Zero(3, 2))), ContractError);
}

TEST_CASE("encoder gradients match central differences over 100 draws") {
  Rng rng(5);
  const SinusoidSpec spec{4, 10000.0};
  double worst = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    ValueEncoderParams<double> p = scaled_random<double>(4, 3, 2, rng);
    const double v = rng.uniform();
    Mat<double> up(kValueTokenCount, 2);
    for (Eigen::Index i = 0; i < up.size(); ++i) up.data()[i] = rng.normal();
    ValueEncoderParams<double> g = encode_backward(v, p, spec, up);
    auto params = p.tensors();
    auto grads = g.tensors();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double err = support::gradient_error(*params[i].value, *grads[i].value,
                                                 [&] { return dot(encode(v, p, spec), up); }, 1e-5);
      worst = std::max(worst, err);
    }
  }
  MESSAGE("worst relative error " << worst);
  CHECK(worst < 1e-6);
}

TEST_CASE("single-precision gradients stay within 1e-3") {
  Rng rng(6);
  const SinusoidSpec spec{4, 10000.0};
  for (int draw = 0; draw < 100; ++draw) {
    ValueEncoderParams<double> p = scaled_random<double>(4, 3, 2, rng);
    ValueEncoderParams<float> pf;
    pf.w1 = p.w1.cast<float>();
    pf.b1 = p.b1.cast<float>();
    pf.w2 = p.w2.cast<float>();
    pf.b2 = p.b2.cast<float>();
    pf.pos_emb = p.pos_emb.cast<float>();
    const double v = rng.uniform();
    Mat<double> up(kValueTokenCount, 2);
    for (Eigen::Index i = 0; i < up.size(); ++i) up.data()[i] = rng.normal();
    ValueEncoderParams<double> gd = encode_backward(v, p, spec, up);
    ValueEncoderParams<float> gf = encode_backward(v, pf, spec, Mat<float>(up.cast<float>()));
    auto a = gd.tensors();
    auto b = gf.tensors();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const Mat<double> bf = b[i].value->cast<double>();
      const double scale = std::max(a[i].value->norm(), 1e-30);
      CHECK((bf - *a[i].value).norm() / scale < 1e-3);
    }
  }
}

TEST_CASE("encode_batch agrees with encode") {
  Rng rng(7);
  const SinusoidSpec spec{};
  const ValueEncoderParams<double> p = ValueEncoderParams<double>::random(64, 32, 8, rng);
  const std::vector<double> vals = {0.0, 0.37, 1.0};
  const EncoderBatch<double> b = encode_batch(std::span<const double>(vals), p, spec);
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const Mat<double> tok = encode(vals[i], p, spec);
    CHECK((tok.row(0) - p.pos_emb.row(0) - b.h.row(static_cast<Eigen::Index>(i))).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("compose") {
  Rng rng(8);
  const SinusoidSpec spec{8, 10000.0};
  const ValueEncoderParams<double> p = ValueEncoderParams<double>::random(8, 8, 4, rng);
  const Mat<double> a = encode(0.1, p, spec), b = encode(0.9, p, spec);
  const std::vector<Mat<double>> one = {a};
  CHECK(compose<double>(one) == a);
  const std::vector<Mat<double>> ab = {a, b}, ba = {b, a};
  const Mat<double> c = compose<double>(ab);
  CHECK(c.rows() == 64);
  CHECK(c.topRows(32) == a);
  CHECK(c != compose<double>(ba));
  CHECK_THROWS_AS(compose<double>(std::vector<Mat<double>>{}), ContractError);
  const std::vector<Mat<double>> mixed = {a, Mat<double>::Zero(32, 3)};
  CHECK_THROWS_AS(compose<double>(mixed), ContractError);
}
