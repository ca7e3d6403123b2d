#pragma once

#include "spiro/logistic.hpp"
#include "spiro/phase.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <array>
#include <optional>
#include <string_view>
#include <vector>

namespace spiro {

enum class HorizonLabel { Within1Y, Within2Y, Within3Y, Within4Y, Year5Plus, NonCopd };

inline constexpr int kHorizonCount = 6;
inline constexpr std::array<HorizonLabel, kHorizonCount> kHorizons = {
    HorizonLabel::Within1Y, HorizonLabel::Within2Y,  HorizonLabel::Within3Y,
    HorizonLabel::Within4Y, HorizonLabel::Year5Plus, HorizonLabel::NonCopd};

std::string_view to_string(HorizonLabel label);
/// Throws ValidationError on an unknown label.
HorizonLabel parse_horizon(std::string_view text);

using HorizonDistribution = std::array<double, kHorizonCount>;

/// [fused risk, four phase concavities, trend, encoded demographics].
struct FutureFeatureVector {
  Eigen::VectorXd values;

  static std::vector<std::string> names(int demographic_width);
};

FutureFeatureVector future_feature_vector(double fused_risk, const ConcavityProfile& profile,
                                          const Eigen::VectorXd& encoded_demographics);

/// Six-way multinomial model over FutureFeatureVector.
struct HorizonModel {
  LogisticModel model;
};

HorizonModel train_horizon(const std::vector<FutureFeatureVector>& features,
                           const std::vector<HorizonLabel>& labels, const TrainConfig& cfg);

/// Throws NotTrained for an unfitted model.
HorizonDistribution predict_future_risk(const FutureFeatureVector& v, const HorizonModel& model);

HorizonLabel top_label(const HorizonDistribution& dist);

/// Mean onset year treating NON_COPD as year 6.
double expected_horizon(const HorizonDistribution& dist);

nlohmann::json horizon_report(const HorizonDistribution& dist, const FutureFeatureVector& v);

}  // namespace spiro
