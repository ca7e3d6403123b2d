#include "spiro/logistic.hpp"

#include "spiro/error.hpp"
#include "spiro/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace spiro {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be > 0");
  if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
  if (batch_size < 0) throw InvalidArgument("batch size must be >= 0");
  if (l2 < 0.0) throw InvalidArgument("l2 penalty must be >= 0");
}

double cross_entropy(const Eigen::Ref<const Eigen::VectorXd>& probs, int label) {
  if (probs.size() == 0 || !probs.allFinite() || probs.minCoeff() < 0.0 ||
      std::abs(probs.sum() - 1.0) > 1e-6) {
    throw InvalidDistribution("probabilities must be non-negative and sum to 1");
  }
  if (label < 0 || label >= probs.size()) throw InvalidArgument("label out of range");
  return -std::log(std::max(probs(label), 1e-12));
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  Standardizer s;
  s.mean = x.colwise().mean().transpose();
  s.scale = Eigen::VectorXd::Ones(x.cols());
  if (x.rows() > 1) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double var = (x.col(j).array() - s.mean(j)).square().sum() / double(x.rows());
      if (var > 1e-24) s.scale(j) = std::sqrt(var);
    }
  }
  return s;
}

Eigen::MatrixXd Standardizer::transform(const Eigen::MatrixXd& x) const {
  return ((x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
}

Eigen::VectorXd Standardizer::transform(const Eigen::VectorXd& x) const {
  return ((x - mean).array() / scale.array()).matrix();
}

LogisticModel LogisticModel::zeros(int classes, int features) {
  LogisticModel m;
  m.classes = classes;
  m.standardizer.mean = Eigen::VectorXd::Zero(features);
  m.standardizer.scale = Eigen::VectorXd::Ones(features);
  m.weights = Eigen::MatrixXd::Zero(classes, features);
  m.bias = Eigen::VectorXd::Zero(classes);
  m.trained = true;
  return m;
}

Eigen::VectorXd LogisticModel::probabilities(const Eigen::VectorXd& x) const {
  if (!trained) throw NotTrained("logistic model has not been trained");
  if (x.size() != features()) throw ShapeError("feature width does not match the model");
  return softmax(weights * standardizer.transform(x) + bias);
}

Eigen::MatrixXd LogisticModel::probabilities(const Eigen::MatrixXd& x) const {
  if (!trained) throw NotTrained("logistic model has not been trained");
  if (x.cols() != features()) throw ShapeError("feature width does not match the model");
  const Eigen::MatrixXd z = standardizer.transform(x);
  Eigen::MatrixXd p(x.rows(), classes);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    p.row(i) = softmax(weights * z.row(i).transpose() + bias).transpose();
  }
  return p;
}

double mean_cross_entropy(const LogisticModel& model, const Eigen::MatrixXd& x,
                          const Eigen::VectorXi& y) {
  const Eigen::MatrixXd p = model.probabilities(x);
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) total += cross_entropy(p.row(i).transpose(), y(i));
  return total / double(x.rows());
}

TrainResult train_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, int classes,
                           const TrainConfig& cfg) {
  cfg.validate();
  if (x.rows() != y.size() || x.rows() == 0) throw ShapeError("feature rows and labels must align");
  if (classes < 2) throw InvalidArgument("need at least two classes");
  if (!x.allFinite()) throw InvalidArgument("non-finite feature value");
  if (y.minCoeff() < 0 || y.maxCoeff() >= classes) throw InvalidArgument("label out of range");
  if (std::set<int>(y.data(), y.data() + y.size()).size() < 2) {
    throw DegenerateLabels("training labels contain a single class");
  }

  TrainResult result;
  LogisticModel& model = result.model;
  model = LogisticModel::zeros(classes, static_cast<int>(x.cols()));
  model.standardizer = Standardizer::fit(x);
  const Eigen::MatrixXd z = model.standardizer.transform(x);
  const Eigen::Index n = z.rows();

  const auto loss_of = [&] {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      total += cross_entropy(softmax(model.weights * z.row(i).transpose() + model.bias), y(i));
    }
    return total / double(n) + 0.5 * cfg.l2 * model.weights.squaredNorm();
  };

  std::mt19937_64 rng(cfg.seed);
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Eigen::Index batch = cfg.batch_size == 0 ? n : std::min<Eigen::Index>(cfg.batch_size, n);

  result.loss_trace.push_back(loss_of());
  Eigen::MatrixXd grad_w(classes, z.cols());
  Eigen::VectorXd grad_b(classes);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (batch < n) std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index stop = std::min(start + batch, n);
      grad_w.setZero();
      grad_b.setZero();
      for (Eigen::Index t = start; t < stop; ++t) {
        const Eigen::Index i = order[t];
        Eigen::VectorXd delta = softmax(model.weights * z.row(i).transpose() + model.bias);
        delta(y(i)) -= 1.0;
        grad_w.noalias() += delta * z.row(i);
        grad_b += delta;
      }
      const double inv = 1.0 / double(stop - start);
      model.weights -= cfg.learning_rate * (grad_w * inv + cfg.l2 * model.weights);
      model.bias -= cfg.learning_rate * grad_b * inv;
    }
    result.loss_trace.push_back(loss_of());
  }
  return result;
}

}  // namespace spiro
