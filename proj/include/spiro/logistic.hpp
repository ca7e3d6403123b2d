#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace spiro {

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 200;
  int batch_size = 0;  // 0 means full batch
  std::uint64_t seed = 0;
  double l2 = 0.0;

  void validate() const;
};

/// -log p[label], with p[label] clamped below at 1e-12. Throws
/// InvalidDistribution unless `probs` is non-negative and sums to 1 (1e-6).
double cross_entropy(const Eigen::Ref<const Eigen::VectorXd>& probs, int label);

/// Per-column affine standardisation fitted on training rows. Columns with
/// (near) zero spread keep scale 1.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd transform(const Eigen::VectorXd& x) const;
};

/// Multinomial logistic regression on standardised features.
struct LogisticModel {
  int classes = 0;
  Standardizer standardizer;
  Eigen::MatrixXd weights;  // classes x features
  Eigen::VectorXd bias;     // classes
  bool trained = false;

  int features() const { return static_cast<int>(weights.cols()); }

  /// Softmax class probabilities for one raw feature vector. Throws NotTrained
  /// on a default-constructed model.
  Eigen::VectorXd probabilities(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd probabilities(const Eigen::MatrixXd& x) const;

  /// Zero weights, identity standardisation.
  static LogisticModel zeros(int classes, int features);
};

struct TrainResult {
  LogisticModel model;
  std::vector<double> loss_trace;  // entry 0 is the initial loss, then one per epoch
};

/// Mini-batch gradient descent on mean cross-entropy + (l2 / 2) * |W|^2.
/// Throws DegenerateLabels when fewer than two classes appear in `y`.
TrainResult train_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXi& y, int classes,
                           const TrainConfig& cfg);

/// Mean cross-entropy of `model` on raw rows (no penalty term).
double mean_cross_entropy(const LogisticModel& model, const Eigen::MatrixXd& x,
                          const Eigen::VectorXi& y);

}  // namespace spiro
