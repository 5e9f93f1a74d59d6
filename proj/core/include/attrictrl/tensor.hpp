#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace attrictrl {

// Row-major dense matrix; rows index tokens or batch elements.
template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
T sigmoid(T x) noexcept {
  return T(1) / (T(1) + std::exp(-x));
}

template <typename T>
T silu(T x) noexcept {
  return x * sigmoid(x);
}

template <typename T>
T silu_grad(T x) noexcept {
  const T s = sigmoid(x);
  return s * (T(1) + x * (T(1) - s));
}

template <typename T>
Mat<T> silu(const Mat<T>& x) {
  return x.unaryExpr([](T v) { return silu(v); });
}

// Adds a 1 x n row to every row of m.
template <typename T>
void add_row(Mat<T>& m, const Mat<T>& row) {
  m.rowwise() += row.row(0);
}

template <typename T>
Mat<T> column_sums(const Mat<T>& m) {
  return m.colwise().sum();
}

// A named parameter tensor, used by serialization, optimizers and gradient
// checks alike.
template <typename T>
struct NamedTensor {
  std::string name;
  Mat<T>* value;
};

template <typename T>
using TensorList = std::vector<NamedTensor<T>>;

template <typename To, typename From>
Mat<To> cast(const Mat<From>& m) {
  return m.template cast<To>();
}

}  // namespace attrictrl
