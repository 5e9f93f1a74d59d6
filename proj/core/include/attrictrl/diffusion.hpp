#pragma once

#include <vector>

#include "attrictrl/tensor.hpp"

namespace attrictrl {

// Linear beta schedule over T steps with alpha_bar_t = prod_{s<=t} (1 - beta_s).
class NoiseSchedule {
 public:
  static constexpr int kDefaultSteps = 200;
  static constexpr double kDefaultBetaStart = 1e-4;
  static constexpr double kDefaultBetaEnd = 0.02;

  static NoiseSchedule linear(int steps = kDefaultSteps, double beta_start = kDefaultBetaStart,
                              double beta_end = kDefaultBetaEnd);
  // Any betas in (0,1); throws ContractError otherwise.
  static NoiseSchedule from_betas(std::vector<double> betas);

  int steps() const noexcept { return static_cast<int>(betas_.size()); }
  double beta(int t) const { return betas_.at(static_cast<std::size_t>(t)); }
  double alpha(int t) const { return 1.0 - beta(t); }
  double alpha_bar(int t) const { return alpha_bars_.at(static_cast<std::size_t>(t)); }
  double alpha_bar_prev(int t) const { return t == 0 ? 1.0 : alpha_bar(t - 1); }
  // Variance of q(x_{t-1} | x_t, x_0).
  double posterior_variance(int t) const;

  const std::vector<double>& betas() const noexcept { return betas_; }
  const std::vector<double>& alpha_bars() const noexcept { return alpha_bars_; }

  void check_timestep(int t) const;

 private:
  explicit NoiseSchedule(std::vector<double> betas);

  std::vector<double> betas_;
  std::vector<double> alpha_bars_;
};

// sqrt(alpha_bar) z0 + sqrt(1 - alpha_bar) eps for an explicit alpha_bar.
template <typename T>
Mat<T> q_sample_at(const Mat<T>& z0, const Mat<T>& eps, double alpha_bar);

// Forward noising at timestep t; throws ContractError when t is outside
// [0, T) or the shapes differ.
template <typename T>
Mat<T> q_sample(const Mat<T>& z0, int t, const Mat<T>& eps, const NoiseSchedule& sched);

}  // namespace attrictrl
