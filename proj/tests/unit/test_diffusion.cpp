#include <doctest.h>

#include <cmath>

#include "attrictrl/diffusion.hpp"
#include "attrictrl/error.hpp"
#include "attrictrl/rng.hpp"

using namespace attrictrl;

TEST_CASE("default linear schedule") {
  const NoiseSchedule s = NoiseSchedule::linear();
  REQUIRE(s.steps() == 200);
  CHECK(s.beta(0) == doctest::Approx(1e-4));
  CHECK(s.beta(199) == doctest::Approx(0.02));
  CHECK(s.beta(100) - s.beta(99) == doctest::Approx(s.beta(1) - s.beta(0)));
  CHECK(s.alpha_bar(0) == doctest::Approx(1.0 - 1e-4));
  double prod = 1.0;
  for (int t = 0; t < s.steps(); ++t) {
    CHECK(s.beta(t) > 0.0);
    CHECK(s.beta(t) < 1.0);
    prod *= 1.0 - s.beta(t);
    CHECK(s.alpha_bar(t) == doctest::Approx(prod).epsilon(1e-14));
    if (t > 0) CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
    CHECK(s.posterior_variance(t) >= 0.0);
    CHECK(s.posterior_variance(t) <= s.beta(t));
  }
  CHECK(s.posterior_variance(0) == 0.0);
  CHECK(s.alpha_bar_prev(0) == 1.0);
}

TEST_CASE("invalid schedules are rejected") {
  CHECK_THROWS_AS(NoiseSchedule::linear(0), ConfigError);
  CHECK_THROWS_AS(NoiseSchedule::linear(10, 0.5, 0.1), ConfigError);
  CHECK_THROWS_AS(NoiseSchedule::linear(10, 1e-4, 1.0), ConfigError);
  CHECK_THROWS_AS(NoiseSchedule::from_betas({}), ContractError);
  CHECK_THROWS_AS(NoiseSchedule::from_betas({0.1, 0.0}), ContractError);
}

TEST_CASE("q_sample limits and range") {
  Mat<double> z0 = Mat<double>::Random(2, 5);
  Mat<double> eps = Mat<double>::Random(2, 5);
  CHECK(q_sample_at(z0, eps, 1.0) == z0);
  CHECK(q_sample_at(z0, eps, 0.0) == eps);
  const NoiseSchedule s = NoiseSchedule::linear(10);
  CHECK_THROWS_AS(q_sample(z0, -1, eps, s), ContractError);
  CHECK_THROWS_AS(q_sample(z0, 10, eps, s), ContractError);
  CHECK_THROWS_AS(q_sample(z0, 0, Mat<double>(Mat<double>::Zero(3, 5)), s), ContractError);
  const Mat<double> zt = q_sample(z0, 4, eps, s);
  const double a = std::sqrt(s.alpha_bar(4)), b = std::sqrt(1 - s.alpha_bar(4));
  CHECK((zt - (a * z0 + b * eps)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(a * a + b * b == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("Monte-Carlo variance of z_t matches 1 - alpha_bar") {
  const NoiseSchedule s = NoiseSchedule::linear();
  Rng rng = Rng::stream(9, "noise");
  const int n = 100000;
  const Mat<double> z0 = Mat<double>::Zero(1, n);
  Mat<double> eps(1, n);
  for (int i = 0; i < n; ++i) eps(0, i) = rng.normal();
  for (int t : {0, 10, 50, 199}) {
    const Mat<double> zt = q_sample(z0, t, eps, s);
    const double mean = zt.mean();
    const double var = (zt.array() - mean).square().sum() / (n - 1);
    const double expect = 1.0 - s.alpha_bar(t);
    CHECK(std::abs(var - expect) <= 0.02 * expect);
  }
}
