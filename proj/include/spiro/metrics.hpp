#pragma once

#include "spiro/fusion.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spiro {

/// Area under the ROC curve by the trapezoidal rule over thresholds swept
/// from high to low; equal scores form a single threshold step. Throws
/// UndefinedMetric unless both classes are present.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// Step-wise area under the precision-recall curve:
/// sum over thresholds of (recall_i - recall_{i-1}) * precision_i, ties
/// grouped. Throws UndefinedMetric without positives.
double auprc(std::span<const double> scores, std::span<const int> labels);

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
};

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> labels);

/// 2PR / (P + R); 0 when there are no true positives.
double f1_score(std::span<const int> predictions, std::span<const int> labels);

/// Index (into `curves`) of each group's 1-medoid under summed L1 distance.
/// All curves must share one volume grid. Lowest index wins ties. Throws
/// EmptyGroup when a group in [0, groups) has no member.
std::vector<std::size_t> group_medoid(const std::vector<Eigen::VectorXd>& curves,
                                      std::span<const int> group, int groups);

enum class SubgroupAxis { Sex, Smoke, Age };

SubgroupAxis parse_subgroup_axis(std::string_view text);

/// Youth 18-44, Middle 45-54, Elderly 55 and above.
std::string age_band(double age);

std::string subgroup_key(SubgroupAxis axis, const DemographicRecord& demo);

struct MetricSummary {
  std::size_t n = 0;
  double prevalence = 0.0;
  std::optional<double> auroc;  // empty when undefined for the slice
  std::optional<double> auprc;
  double f1 = 0.0;
};

MetricSummary summarize(std::span<const double> scores, std::span<const int> labels,
                        double threshold);

/// Per-slice summaries keyed by subgroup name.
std::map<std::string, MetricSummary> subgroup_metrics(std::span<const double> scores,
                                                      std::span<const int> labels,
                                                      std::span<const DemographicRecord> demos,
                                                      SubgroupAxis axis, double threshold);

}  // namespace spiro
