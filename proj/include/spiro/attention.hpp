#pragma once

#include "spiro/curve.hpp"
#include "spiro/encoder.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace spiro {

/// Volume attention: X' = X W1^T + b1, X'' = swish(X'), X''' = X'' W_bil,
/// score = X''' w2 + b2.
struct AttentionParams {
  Eigen::MatrixXd w1;     // A x D
  Eigen::VectorXd b1;     // A
  Eigen::MatrixXd w_bil;  // A x A
  Eigen::VectorXd w2;     // A
  Eigen::VectorXd b2;     // 1

  int input_size() const { return static_cast<int>(w1.cols()); }
  int attention_size() const { return static_cast<int>(w1.rows()); }

  static AttentionParams zeros(int input_size, int attention_size);
  static AttentionParams random(int input_size, int attention_size, std::mt19937_64& rng);
  AttentionParams zeros_like() const { return zeros(input_size(), attention_size()); }

  template <typename F>
  void visit(F&& f) {
    f("w1", w1);
    f("b1", b1);
    f("w_bil", w_bil);
    f("w2", w2);
    f("b2", b2);
  }

  void validate() const;
};

struct AttentionResult {
  Eigen::VectorXd weights;  // zero on masked patches
  Eigen::VectorXd context;  // weighted sum of patch contexts
  Eigen::VectorXd scores;   // pre-softmax, -inf on masked patches
};

struct AttentionCache {
  Eigen::MatrixXd pre;       // X'
  Eigen::MatrixXd activated; // X''
  Eigen::MatrixXd mixed;     // X'''
};

/// Scores each row of `contexts` (patches x D). An empty `mask` marks every
/// row valid; otherwise rows with mask 0 are excluded from the softmax.
/// Throws EmptySequence when no row is valid.
AttentionResult volume_attention(const Eigen::MatrixXd& contexts, const AttentionParams& params,
                                 std::span<const std::uint8_t> mask = {},
                                 AttentionCache* cache = nullptr);

/// Returns d(loss)/d(contexts) given d(loss)/d(result.context); accumulates
/// parameter gradients into `grad`.
Eigen::MatrixXd volume_attention_backward(const Eigen::MatrixXd& contexts,
                                          const AttentionResult& result,
                                          const AttentionCache& cache,
                                          const Eigen::VectorXd& d_context,
                                          const AttentionParams& params, AttentionParams& grad);

/// Two-class affine head; class 1 is COPD.
struct HeadParams {
  Eigen::MatrixXd w;  // 2 x D
  Eigen::VectorXd b;  // 2

  static HeadParams zeros(int input_size);
  static HeadParams random(int input_size, std::mt19937_64& rng);
  HeadParams zeros_like() const { return zeros(static_cast<int>(w.cols())); }

  template <typename F>
  void visit(F&& f) {
    f("w", w);
    f("b", b);
  }
};

/// Class probabilities [P(non-COPD), P(COPD)].
Eigen::Vector2d detection_head_probs(const Eigen::VectorXd& context, const HeadParams& params);

/// P(COPD) from the head.
double detection_head(const Eigen::VectorXd& context, const HeadParams& params);

struct OverlaySpan {
  double v_start = 0.0;
  double v_end = 0.0;
  double weight = 0.0;
};

struct AttentionOverlay {
  std::vector<OverlaySpan> patches;
  double p_hat = 0.0;
  std::optional<double> fused_risk;
};

/// Maps each patch's weight onto the volume span its samples cover. The spans
/// tile [first volume, FVC]. Throws PlanViolation when the plan or the weights
/// do not match the curve.
AttentionOverlay attention_overlay(const AttentionResult& result, const VolumeFlowCurve& curve,
                                   const PatchPlan& plan, double p_hat);

nlohmann::json to_json(const AttentionOverlay& overlay);

/// Curve plus a heat strip underneath it; strip opacity is weight / max weight.
std::string render_overlay_svg(const AttentionOverlay& overlay, const VolumeFlowCurve& curve);

}  // namespace spiro
