#include "spiro/attention.hpp"

#include "spiro/error.hpp"
#include "spiro/numeric.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace spiro {
namespace {

Eigen::MatrixXd uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const double scale = std::sqrt(3.0 / static_cast<double>(cols));
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = scale * dist(rng);
  return m;
}

}  // namespace

AttentionParams AttentionParams::zeros(int input_size, int attention_size) {
  if (input_size < 1 || attention_size < 1) throw InvalidParams("attention sizes must be positive");
  AttentionParams p;
  p.w1 = Eigen::MatrixXd::Zero(attention_size, input_size);
  p.b1 = Eigen::VectorXd::Zero(attention_size);
  p.w_bil = Eigen::MatrixXd::Zero(attention_size, attention_size);
  p.w2 = Eigen::VectorXd::Zero(attention_size);
  p.b2 = Eigen::VectorXd::Zero(1);
  return p;
}

AttentionParams AttentionParams::random(int input_size, int attention_size, std::mt19937_64& rng) {
  AttentionParams p = zeros(input_size, attention_size);
  p.w1 = uniform(attention_size, input_size, rng);
  p.w_bil = uniform(attention_size, attention_size, rng);
  p.w2 = uniform(attention_size, 1, rng);
  return p;
}

void AttentionParams::validate() const {
  const Eigen::Index a = w1.rows();
  if (b1.size() != a || w_bil.rows() != a || w_bil.cols() != a || w2.size() != a || b2.size() != 1) {
    throw InvalidParams("inconsistent attention parameter shapes");
  }
  if (!w1.allFinite() || !b1.allFinite() || !w_bil.allFinite() || !w2.allFinite() || !b2.allFinite()) {
    throw InvalidParams("non-finite attention parameters");
  }
}

AttentionResult volume_attention(const Eigen::MatrixXd& contexts, const AttentionParams& params,
                                 std::span<const std::uint8_t> mask, AttentionCache* cache) {
  params.validate();
  if (contexts.cols() != params.input_size()) throw ShapeError("context width does not match attention");
  const Eigen::Index n = contexts.rows();
  if (!mask.empty() && static_cast<Eigen::Index>(mask.size()) != n) {
    throw ShapeError("mask length does not match patch count");
  }
  const auto valid = [&](Eigen::Index j) { return mask.empty() || mask[j] != 0; };

  AttentionCache local;
  AttentionCache& c = cache ? *cache : local;
  c.pre = (contexts * params.w1.transpose()).rowwise() + params.b1.transpose();
  c.activated = c.pre.unaryExpr([](double x) { return swish(x); });
  c.mixed = c.activated * params.w_bil;

  AttentionResult r;
  Eigen::VectorXd unbiased = c.mixed * params.w2;
  bool any = false;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (valid(j)) {
      any = true;
    } else {
      unbiased(j) = -std::numeric_limits<double>::infinity();
    }
  }
  if (!any) throw EmptySequence("no valid patches to attend over");
  r.weights = softmax(unbiased);
  r.scores = unbiased.array() + params.b2(0);
  r.context = contexts.transpose() * r.weights;
  return r;
}

Eigen::MatrixXd volume_attention_backward(const Eigen::MatrixXd& contexts,
                                          const AttentionResult& result,
                                          const AttentionCache& cache,
                                          const Eigen::VectorXd& d_context,
                                          const AttentionParams& params, AttentionParams& grad) {
  const Eigen::VectorXd& a = result.weights;
  Eigen::MatrixXd d_x = a * d_context.transpose();
  const Eigen::VectorXd d_a = contexts * d_context;
  // Masked rows have a == 0, so their score gradients vanish.
  const Eigen::VectorXd d_s = (a.array() * (d_a.array() - a.dot(d_a))).matrix();

  grad.w2 += cache.mixed.transpose() * d_s;
  grad.b2(0) += d_s.sum();
  const Eigen::MatrixXd d_mixed = d_s * params.w2.transpose();
  grad.w_bil += cache.activated.transpose() * d_mixed;
  const Eigen::MatrixXd d_act = d_mixed * params.w_bil.transpose();
  const Eigen::MatrixXd d_pre =
      (d_act.array() * cache.pre.unaryExpr([](double x) { return swish_derivative(x); }).array()).matrix();
  grad.w1 += d_pre.transpose() * contexts;
  grad.b1 += d_pre.colwise().sum().transpose();
  d_x += d_pre * params.w1;
  return d_x;
}

HeadParams HeadParams::zeros(int input_size) {
  if (input_size < 1) throw InvalidParams("head input size must be positive");
  return {Eigen::MatrixXd::Zero(2, input_size), Eigen::VectorXd::Zero(2)};
}

HeadParams HeadParams::random(int input_size, std::mt19937_64& rng) {
  HeadParams p = zeros(input_size);
  p.w = uniform(2, input_size, rng);
  return p;
}

Eigen::Vector2d detection_head_probs(const Eigen::VectorXd& context, const HeadParams& params) {
  if (context.size() != params.w.cols()) throw ShapeError("head input width mismatch");
  if (!context.allFinite()) throw InvalidArgument("non-finite head input");
  const Eigen::Vector2d logits = params.w * context + params.b;
  return softmax(logits);
}

double detection_head(const Eigen::VectorXd& context, const HeadParams& params) {
  return detection_head_probs(context, params)(1);
}

AttentionOverlay attention_overlay(const AttentionResult& result, const VolumeFlowCurve& curve,
                                   const PatchPlan& plan, double p_hat) {
  const int len = static_cast<int>(curve.size());
  if (plan.length != len || plan.k < 1 || plan.patches != (len + plan.k - 1) / plan.k) {
    throw PlanViolation("patch plan does not match the curve");
  }
  if (result.weights.size() < plan.patches) throw PlanViolation("fewer attention weights than patches");
  for (Eigen::Index j = plan.patches; j < result.weights.size(); ++j) {
    if (result.weights(j) != 0.0) throw PlanViolation("attention mass on a patch beyond the curve");
  }
  AttentionOverlay overlay;
  overlay.p_hat = p_hat;
  for (int j = 0; j < plan.patches; ++j) {
    const int first = j * plan.k;
    const int next = std::min(first + plan.k, len - 1);
    const double v_end = j + 1 == plan.patches ? curve.fvc() : curve.volume(next);
    overlay.patches.push_back({curve.volume(first), v_end, result.weights(j)});
  }
  return overlay;
}

nlohmann::json to_json(const AttentionOverlay& overlay) {
  nlohmann::json patches = nlohmann::json::array();
  for (const OverlaySpan& s : overlay.patches) {
    patches.push_back({{"v_start", s.v_start}, {"v_end", s.v_end}, {"weight", s.weight}});
  }
  nlohmann::json j = {{"patches", patches}, {"p_hat", overlay.p_hat}};
  j["fused_risk"] = overlay.fused_risk ? nlohmann::json(*overlay.fused_risk) : nlohmann::json(nullptr);
  return j;
}

std::string render_overlay_svg(const AttentionOverlay& overlay, const VolumeFlowCurve& curve) {
  constexpr double width = 640.0;
  constexpr double height = 360.0;
  constexpr double margin = 40.0;
  constexpr double strip = 24.0;
  const double v0 = curve.volume(0);
  const double v1 = std::max(curve.fvc(), v0 + 1e-9);
  const double q_max = std::max(curve.flow.maxCoeff(), 1e-9);
  const double plot_h = height - 2 * margin - strip - 8.0;
  const auto x_of = [&](double v) { return margin + (v - v0) / (v1 - v0) * (width - 2 * margin); };
  const auto y_of = [&](double q) { return margin + plot_h * (1.0 - std::max(q, 0.0) / q_max); };

  double w_max = 0.0;
  for (const OverlaySpan& s : overlay.patches) w_max = std::max(w_max, s.weight);

  std::ostringstream svg;
  svg << std::fixed << std::setprecision(3);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const double strip_y = height - margin - strip;
  for (const OverlaySpan& s : overlay.patches) {
    const double opacity = w_max > 0.0 ? s.weight / w_max : 0.0;
    svg << "<rect x=\"" << x_of(s.v_start) << "\" y=\"" << strip_y << "\" width=\""
        << std::max(x_of(s.v_end) - x_of(s.v_start), 0.0) << "\" height=\"" << strip
        << "\" fill=\"#d62728\" fill-opacity=\"" << opacity << "\"/>\n";
  }
  svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  for (Eigen::Index i = 0; i < curve.volume.size(); ++i) {
    svg << x_of(curve.volume(i)) << ',' << y_of(curve.flow(i)) << (i + 1 < curve.volume.size() ? " " : "");
  }
  svg << "\"/>\n";
  svg << "<text x=\"" << margin << "\" y=\"" << margin - 12 << "\" font-size=\"12\">p_hat="
      << overlay.p_hat;
  if (overlay.fused_risk) svg << " fused_risk=" << *overlay.fused_risk;
  svg << "</text>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 8
      << "\" font-size=\"12\" text-anchor=\"middle\">volume (L)</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace spiro
