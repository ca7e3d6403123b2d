#pragma once

#include <Eigen/Dense>

#include <functional>

namespace spiro {

/// Loss of a flat parameter vector. When `grad` is non-null the analytic
/// gradient is written into it.
using LossFunction = std::function<double(const Eigen::VectorXd& params, Eigen::VectorXd* grad)>;

/// Largest relative disagreement between the analytic gradient and central
/// differences, |a - d| / max(|a|, |d|, 1e-8), over all parameters.
/// eps must lie in [1e-7, 1e-4]. Throws InvalidLoss when the loss is not
/// finite or not reproducible at a fixed point.
double grad_check(const LossFunction& loss, const Eigen::VectorXd& params, double eps = 1e-4);

}  // namespace spiro
