#pragma once

#include "spiro/logistic.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spiro {

enum class Sex { Female, Male };
enum class Smoking { Never, Former, Current };

std::string_view to_string(Sex sex);
std::string_view to_string(Smoking smoking);
Sex parse_sex(std::string_view text);
Smoking parse_smoking(std::string_view text);

struct DemographicRecord {
  Sex sex = Sex::Female;
  double age = 0.0;       // years
  Smoking smoking = Smoking::Never;
  double fev1_fvc = 1.0;  // (0, 1]

  /// Throws ValidationError on a non-positive age or a ratio outside (0, 1].
  void validate() const;
};

/// One-hot sex and smoking status, age standardised with training-set
/// statistics, raw FEV1/FVC ratio.
struct DemographicEncoder {
  double age_mean = 0.0;
  double age_scale = 1.0;

  static constexpr int kWidth = 7;
  static const std::array<std::string_view, kWidth>& feature_names();

  static DemographicEncoder fit(const std::vector<DemographicRecord>& records);
  Eigen::VectorXd encode(const DemographicRecord& record) const;
};

/// [P(non-COPD), P(COPD)] from the detection head followed by encoded
/// demographics.
Eigen::VectorXd fusion_features(double p_hat, const Eigen::VectorXd& encoded_demographics);

struct FeatureContribution {
  std::string name;
  double value = 0.0;  // contribution to the COPD log-odds
};

struct FusedRisk {
  double risk = 0.0;
  std::vector<FeatureContribution> contributions;
};

struct FusionModel {
  DemographicEncoder encoder;
  LogisticModel model;  // two classes over fusion_features()

  bool trained() const { return model.trained; }
};

/// Fits the demographic encoder and a two-class logistic model on the fused
/// features.
FusionModel train_fusion(const std::vector<double>& p_hat,
                         const std::vector<DemographicRecord>& demographics,
                         const std::vector<int>& labels, const TrainConfig& cfg);

/// Throws NotTrained for an unfitted model.
FusedRisk fuse_and_score(double p_hat, const DemographicRecord& demo, const FusionModel& fusion);

}  // namespace spiro
