#pragma once

#include "spiro/attention.hpp"
#include "spiro/encoder.hpp"
#include "spiro/logistic.hpp"
#include "spiro/lstm.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace spiro {

struct DetectorConfig {
  int k = 32;            // patch length (samples)
  int in_channels = 2;   // volume, flow
  int channels = 16;     // C
  int hidden = 32;       // H
  int attention = 32;    // attention width A
  int kernel1 = 5;
  int kernel2 = 3;

  void validate() const;
};

/// Every trainable tensor of the detection stack
/// (patch encoder -> Bi-LSTM -> volume attention -> head).
struct DetectorParams {
  ConvEncoderParams encoder;
  BiLstmParams lstm;
  AttentionParams attention;
  HeadParams head;

  static DetectorParams random(const DetectorConfig& cfg, std::uint64_t seed);
  static DetectorParams zeros(const DetectorConfig& cfg);
  DetectorParams zeros_like() const;

  /// Calls f(name, tensor) for every tensor in a fixed order.
  template <typename F>
  void visit(F&& f) {
    encoder.visit([&](const char* n, auto& t) { f(std::string("encoder.") + n, t); });
    lstm.visit([&](const char* n, auto& t) { f(std::string("lstm.") + n, t); });
    attention.visit([&](const char* n, auto& t) { f(std::string("attention.") + n, t); });
    head.visit([&](const char* n, auto& t) { f(std::string("head.") + n, t); });
  }

  Eigen::Index size() const;
  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);
};

struct DetectionOutput {
  double p_hat = 0.0;
  PatchPlan plan;
  AttentionResult attention;  // weights over the batch's S_max slots
};

/// Runs the stack on a batch of sequences (each L_i x in_channels). S_max is
/// derived from the longest sequence in the batch.
std::vector<DetectionOutput> detect(std::span<const Eigen::MatrixXd> series,
                                    const DetectorConfig& cfg, const DetectorParams& params);

/// Mean cross-entropy of the head over the batch. Accumulates the analytic
/// gradient into `grad` when given.
double detection_loss(std::span<const Eigen::MatrixXd> series, std::span<const int> labels,
                      const DetectorConfig& cfg, const DetectorParams& params,
                      DetectorParams* grad = nullptr);

struct DetectorTrainResult {
  DetectorParams params;
  std::vector<double> loss_trace;  // mean batch loss per epoch
};

using EpochCallback = std::function<void(int epoch, double loss)>;

/// Plain mini-batch gradient descent. Deterministic for a fixed seed.
DetectorTrainResult train_detector(std::span<const Eigen::MatrixXd> series,
                                   std::span<const int> labels, const DetectorConfig& cfg,
                                   const TrainConfig& train, const EpochCallback& on_epoch = {});

}  // namespace spiro
