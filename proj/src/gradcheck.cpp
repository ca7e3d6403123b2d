#include "spiro/gradcheck.hpp"

#include "spiro/error.hpp"

#include <algorithm>
#include <cmath>

namespace spiro {

double grad_check(const LossFunction& loss, const Eigen::VectorXd& params, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-4)) throw InvalidArgument("grad_check eps must be in [1e-7, 1e-4]");

  Eigen::VectorXd analytic = Eigen::VectorXd::Zero(params.size());
  const double base = loss(params, &analytic);
  if (!std::isfinite(base)) throw InvalidLoss("loss is not finite");
  if (loss(params, nullptr) != base) throw InvalidLoss("loss is not deterministic");
  if (analytic.size() != params.size()) throw InvalidLoss("gradient size does not match parameters");

  double worst = 0.0;
  Eigen::VectorXd probe = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    probe(i) = params(i) + eps;
    const double up = loss(probe, nullptr);
    probe(i) = params(i) - eps;
    const double down = loss(probe, nullptr);
    probe(i) = params(i);
    if (!std::isfinite(up) || !std::isfinite(down)) throw InvalidLoss("loss is not finite near the probe");
    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(analytic(i)), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic(i) - numeric) / denom);
  }
  return worst;
}

}  // namespace spiro
