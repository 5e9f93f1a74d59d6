#include "attrictrl/diffusion.hpp"

#include <cmath>
#include <string>

#include "attrictrl/error.hpp"

namespace attrictrl {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
  if (betas_.empty()) throw ContractError("noise schedule needs at least one step");
  double running = 1.0;
  alpha_bars_.reserve(betas_.size());
  for (double b : betas_) {
    if (!(b > 0.0 && b < 1.0)) throw ContractError("every beta must lie in (0,1)");
    running *= 1.0 - b;
    alpha_bars_.push_back(running);
  }
}

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start, double beta_end) {
  if (steps <= 0) throw ConfigError("schedule steps must be positive");
  if (!(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end)) {
    throw ConfigError("linear schedule needs 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(t) / (steps - 1);
    betas[static_cast<std::size_t>(t)] = beta_start + frac * (beta_end - beta_start);
  }
  return NoiseSchedule(std::move(betas));
}

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) {
  return NoiseSchedule(std::move(betas));
}

double NoiseSchedule::posterior_variance(int t) const {
  return beta(t) * (1.0 - alpha_bar_prev(t)) / (1.0 - alpha_bar(t));
}

void NoiseSchedule::check_timestep(int t) const {
  if (t < 0 || t >= steps()) {
    throw ContractError("timestep " + std::to_string(t) + " outside [0, " + std::to_string(steps()) + ")");
  }
}

template <typename T>
Mat<T> q_sample_at(const Mat<T>& z0, const Mat<T>& eps, double alpha_bar) {
  if (z0.rows() != eps.rows() || z0.cols() != eps.cols()) {
    throw ContractError("q_sample: z0 and eps shapes differ");
  }
  const T a = static_cast<T>(std::sqrt(alpha_bar));
  const T s = static_cast<T>(std::sqrt(1.0 - alpha_bar));
  return a * z0 + s * eps;
}

template <typename T>
Mat<T> q_sample(const Mat<T>& z0, int t, const Mat<T>& eps, const NoiseSchedule& sched) {
  sched.check_timestep(t);
  return q_sample_at(z0, eps, sched.alpha_bar(t));
}

template Mat<float> q_sample_at<float>(const Mat<float>&, const Mat<float>&, double);
template Mat<double> q_sample_at<double>(const Mat<double>&, const Mat<double>&, double);
template Mat<float> q_sample<float>(const Mat<float>&, int, const Mat<float>&, const NoiseSchedule&);
template Mat<double> q_sample<double>(const Mat<double>&, int, const Mat<double>&, const NoiseSchedule&);

}  // namespace attrictrl
