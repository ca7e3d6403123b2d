#include "spiro/fusion.hpp"

#include "spiro/error.hpp"

#include <cmath>

namespace spiro {

std::string_view to_string(Sex sex) { return sex == Sex::Male ? "male" : "female"; }

std::string_view to_string(Smoking smoking) {
  switch (smoking) {
    case Smoking::Never: return "never";
    case Smoking::Former: return "former";
    case Smoking::Current: return "current";
  }
  return "never";
}

Sex parse_sex(std::string_view text) {
  if (text == "male") return Sex::Male;
  if (text == "female") return Sex::Female;
  throw ValidationError("unknown sex code '" + std::string(text) + "'");
}

Smoking parse_smoking(std::string_view text) {
  if (text == "never") return Smoking::Never;
  if (text == "former") return Smoking::Former;
  if (text == "current") return Smoking::Current;
  throw ValidationError("unknown smoking code '" + std::string(text) + "'");
}

void DemographicRecord::validate() const {
  if (!(age > 0.0) || !std::isfinite(age)) throw ValidationError("age must be positive");
  if (!(fev1_fvc > 0.0 && fev1_fvc <= 1.0)) throw ValidationError("FEV1/FVC must lie in (0, 1]");
}

const std::array<std::string_view, DemographicEncoder::kWidth>& DemographicEncoder::feature_names() {
  static const std::array<std::string_view, kWidth> names = {
      "sex_female", "sex_male", "smoking_never", "smoking_former", "smoking_current",
      "age_std",    "fev1_fvc"};
  return names;
}

DemographicEncoder DemographicEncoder::fit(const std::vector<DemographicRecord>& records) {
  DemographicEncoder enc;
  if (records.empty()) return enc;
  double sum = 0.0;
  for (const auto& r : records) sum += r.age;
  enc.age_mean = sum / double(records.size());
  double var = 0.0;
  for (const auto& r : records) var += (r.age - enc.age_mean) * (r.age - enc.age_mean);
  var /= double(records.size());
  enc.age_scale = var > 1e-12 ? std::sqrt(var) : 1.0;
  return enc;
}

Eigen::VectorXd DemographicEncoder::encode(const DemographicRecord& r) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(kWidth);
  x(r.sex == Sex::Male ? 1 : 0) = 1.0;
  x(2 + static_cast<int>(r.smoking)) = 1.0;
  x(5) = (r.age - age_mean) / age_scale;
  x(6) = r.fev1_fvc;
  return x;
}

Eigen::VectorXd fusion_features(double p_hat, const Eigen::VectorXd& encoded) {
  Eigen::VectorXd x(2 + encoded.size());
  x << 1.0 - p_hat, p_hat, encoded;
  return x;
}

FusionModel train_fusion(const std::vector<double>& p_hat,
                         const std::vector<DemographicRecord>& demographics,
                         const std::vector<int>& labels, const TrainConfig& cfg) {
  if (p_hat.size() != demographics.size() || p_hat.size() != labels.size()) {
    throw ShapeError("fusion inputs must align");
  }
  FusionModel fusion;
  fusion.encoder = DemographicEncoder::fit(demographics);
  const Eigen::Index n = static_cast<Eigen::Index>(p_hat.size());
  Eigen::MatrixXd x(n, 2 + DemographicEncoder::kWidth);
  Eigen::VectorXi y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = fusion_features(p_hat[i], fusion.encoder.encode(demographics[i])).transpose();
    y(i) = labels[i];
  }
  fusion.model = train_logistic(x, y, 2, cfg).model;
  return fusion;
}

FusedRisk fuse_and_score(double p_hat, const DemographicRecord& demo, const FusionModel& fusion) {
  if (!fusion.trained()) throw NotTrained("fusion model has not been trained");
  const Eigen::VectorXd x = fusion_features(p_hat, fusion.encoder.encode(demo));
  FusedRisk out;
  out.risk = fusion.model.probabilities(x)(1);

  const Eigen::VectorXd z = fusion.model.standardizer.transform(x);
  const Eigen::VectorXd log_odds = fusion.model.weights.row(1) - fusion.model.weights.row(0);
  out.contributions.push_back({"p_non_copd", log_odds(0) * z(0)});
  out.contributions.push_back({"p_copd", log_odds(1) * z(1)});
  const auto& names = DemographicEncoder::feature_names();
  for (int j = 0; j < DemographicEncoder::kWidth; ++j) {
    out.contributions.push_back({std::string(names[j]), log_odds(2 + j) * z(2 + j)});
  }
  out.contributions.push_back({"intercept", fusion.model.bias(1) - fusion.model.bias(0)});
  return out;
}

}  // namespace spiro
