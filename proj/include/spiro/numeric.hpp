#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace spiro {

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= Scalar(0)) {
    const Scalar e = std::exp(-x);
    return Scalar(1) / (Scalar(1) + e);
  }
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

template <typename Scalar>
Scalar swish(Scalar x) {
  return x * sigmoid(x);
}

template <typename Scalar>
Scalar swish_derivative(Scalar x) {
  const Scalar s = sigmoid(x);
  return s + x * s * (Scalar(1) - s);
}

// Numerically stable softmax. Entries equal to -inf receive exactly zero mass.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(
    const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  const Scalar peak = z.maxCoeff();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    e(i) = std::isinf(z(i)) && z(i) < 0 ? Scalar(0) : std::exp(z(i) - peak);
  }
  return e / e.sum();
}

// Piecewise-linear interpolation on ascending knots; clamps outside the range.
template <typename XDerived, typename YDerived>
typename XDerived::Scalar interpolate(const Eigen::MatrixBase<XDerived>& xs,
                                      const Eigen::MatrixBase<YDerived>& ys,
                                      typename XDerived::Scalar x) {
  using Scalar = typename XDerived::Scalar;
  const Eigen::Index n = xs.size();
  if (x <= xs(0)) return ys(0);
  if (x >= xs(n - 1)) return ys(n - 1);
  Eigen::Index lo = 0;
  Eigen::Index hi = n - 1;
  while (hi - lo > 1) {
    const Eigen::Index mid = (lo + hi) / 2;
    if (xs(mid) <= x) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const Scalar span = xs(hi) - xs(lo);
  if (span <= Scalar(0)) return ys(lo);
  const Scalar t = (x - xs(lo)) / span;
  return ys(lo) + t * (ys(hi) - ys(lo));
}

}  // namespace spiro
