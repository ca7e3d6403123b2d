#pragma once

#include "spiro/encoder.hpp"

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace spiro {

/// One direction of an LSTM. w is 4H x (input + H) acting on [x; h_prev];
/// gate rows are ordered input, forget, cell, output.
struct LstmDirectionParams {
  Eigen::MatrixXd w;
  Eigen::VectorXd b;
};

struct BiLstmParams {
  int input_size = 0;
  int hidden = 0;
  LstmDirectionParams forward;
  LstmDirectionParams backward;

  int output_size() const { return 2 * hidden; }

  static BiLstmParams zeros(int input_size, int hidden);
  static BiLstmParams random(int input_size, int hidden, std::mt19937_64& rng);
  BiLstmParams zeros_like() const { return zeros(input_size, hidden); }

  template <typename F>
  void visit(F&& f) {
    f("forward.w", forward.w);
    f("forward.b", forward.b);
    f("backward.w", backward.w);
    f("backward.b", backward.b);
  }

  /// Throws InvalidParams on inconsistent shapes or non-finite values.
  void validate() const;
};

struct LstmStepCache {
  Eigen::VectorXd input;   // [x; h_prev]
  Eigen::VectorXd gates;   // post-activation i, f, g, o
  Eigen::VectorXd c_prev;
  Eigen::VectorXd c;
};

struct BiLstmCache {
  // Indexed by packed row; each direction sees the row in its own time order.
  std::vector<LstmStepCache> forward;
  std::vector<LstmStepCache> backward;
};

/// Runs both directions over every sample span of `packed` independently and
/// returns T x 2H rows [h_forward, h_backward].
Eigen::MatrixXd bilstm_forward(const PackedFeatures& packed, const BiLstmParams& params,
                               BiLstmCache* cache = nullptr);

/// Back-propagates d(loss)/d(outputs); accumulates into `grad` and returns
/// d(loss)/d(packed rows).
Eigen::MatrixXd bilstm_backward(const PackedFeatures& packed, const BiLstmCache& cache,
                                const Eigen::MatrixXd& d_outputs, const BiLstmParams& params,
                                BiLstmParams& grad);

}  // namespace spiro
