#include "spiro/predict.hpp"

#include "spiro/error.hpp"
#include "spiro/fusion.hpp"

#include <algorithm>
#include <string>

namespace spiro {

std::string_view to_string(HorizonLabel label) {
  switch (label) {
    case HorizonLabel::Within1Y: return "WITHIN_1Y";
    case HorizonLabel::Within2Y: return "WITHIN_2Y";
    case HorizonLabel::Within3Y: return "WITHIN_3Y";
    case HorizonLabel::Within4Y: return "WITHIN_4Y";
    case HorizonLabel::Year5Plus: return "YEAR_5_PLUS";
    case HorizonLabel::NonCopd: return "NON_COPD";
  }
  return "?";
}

HorizonLabel parse_horizon(std::string_view text) {
  for (HorizonLabel h : kHorizons) {
    if (to_string(h) == text) return h;
  }
  throw ValidationError("unknown horizon label '" + std::string(text) + "'");
}

std::vector<std::string> FutureFeatureVector::names(int demographic_width) {
  std::vector<std::string> n = {"fused_risk", "c_pef_fef25", "c_fef25_fef50",
                                "c_fef50_fef75", "c_fef75_plus", "concavity_trend"};
  const auto& demo_names = DemographicEncoder::feature_names();
  for (int j = 0; j < demographic_width; ++j) {
    n.push_back(demographic_width == DemographicEncoder::kWidth ? std::string(demo_names[j])
                                                                : "demo_" + std::to_string(j));
  }
  return n;
}

FutureFeatureVector future_feature_vector(double fused_risk, const ConcavityProfile& p,
                                          const Eigen::VectorXd& demo) {
  FutureFeatureVector v;
  v.values.resize(6 + demo.size());
  v.values << fused_risk, p.pef_fef25, p.fef25_fef50, p.fef50_fef75, p.fef75_plus, p.trend, demo;
  return v;
}

HorizonModel train_horizon(const std::vector<FutureFeatureVector>& features,
                           const std::vector<HorizonLabel>& labels, const TrainConfig& cfg) {
  if (features.size() != labels.size() || features.empty()) throw ShapeError("horizon inputs must align");
  const Eigen::Index n = static_cast<Eigen::Index>(features.size());
  const Eigen::Index width = features.front().values.size();
  Eigen::MatrixXd x(n, width);
  Eigen::VectorXi y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (features[i].values.size() != width) throw ShapeError("horizon feature widths differ");
    x.row(i) = features[i].values.transpose();
    y(i) = static_cast<int>(labels[i]);
  }
  return {train_logistic(x, y, kHorizonCount, cfg).model};
}

HorizonDistribution predict_future_risk(const FutureFeatureVector& v, const HorizonModel& model) {
  if (!model.model.trained) throw NotTrained("horizon model has not been trained");
  if (model.model.classes != kHorizonCount) throw ShapeError("horizon model must have six classes");
  const Eigen::VectorXd p = model.model.probabilities(v.values);
  HorizonDistribution out{};
  for (int c = 0; c < kHorizonCount; ++c) out[c] = p(c);
  return out;
}

HorizonLabel top_label(const HorizonDistribution& dist) {
  return kHorizons[std::max_element(dist.begin(), dist.end()) - dist.begin()];
}

double expected_horizon(const HorizonDistribution& dist) {
  double e = 0.0;
  for (int c = 0; c < kHorizonCount; ++c) e += (c + 1) * dist[c];
  return e;
}

nlohmann::json horizon_report(const HorizonDistribution& dist, const FutureFeatureVector& v) {
  nlohmann::json probs = nlohmann::json::object();
  for (int c = 0; c < kHorizonCount; ++c) probs[std::string(to_string(kHorizons[c]))] = dist[c];
  const auto names = FutureFeatureVector::names(static_cast<int>(v.values.size()) - 6);
  nlohmann::json used = nlohmann::json::object();
  for (std::size_t j = 0; j < names.size(); ++j) used[names[j]] = v.values(static_cast<Eigen::Index>(j));
  return {{"label_probs", probs}, {"top_label", std::string(to_string(top_label(dist)))},
          {"features_used", used}};
}

}  // namespace spiro
