#include "spiro/metrics.hpp"

#include "spiro/error.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace spiro {
namespace {

struct Step {
  double tp = 0.0;
  double fp = 0.0;
};

// Cumulative (TP, FP) after each distinct threshold, highest score first.
std::vector<Step> threshold_steps(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("scores and labels must align");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<Step> steps;
  Step cur;
  for (std::size_t t = 0; t < order.size(); ++t) {
    const std::size_t i = order[t];
    if (labels[i] == 1) {
      cur.tp += 1.0;
    } else {
      cur.fp += 1.0;
    }
    if (t + 1 == order.size() || scores[order[t + 1]] != scores[i]) steps.push_back(cur);
  }
  return steps;
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
  const std::vector<Step> steps = threshold_steps(scores, labels);
  const double pos = steps.empty() ? 0.0 : steps.back().tp;
  const double neg = steps.empty() ? 0.0 : steps.back().fp;
  if (pos == 0.0 || neg == 0.0) throw UndefinedMetric("AUROC needs both classes");
  double area = 0.0;
  double prev_fpr = 0.0;
  double prev_tpr = 0.0;
  for (const Step& s : steps) {
    const double fpr = s.fp / neg;
    const double tpr = s.tp / pos;
    area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
    prev_fpr = fpr;
    prev_tpr = tpr;
  }
  return area;
}

double auprc(std::span<const double> scores, std::span<const int> labels) {
  const std::vector<Step> steps = threshold_steps(scores, labels);
  const double pos = steps.empty() ? 0.0 : steps.back().tp;
  if (pos == 0.0) throw UndefinedMetric("AUPRC needs at least one positive");
  double area = 0.0;
  double prev_recall = 0.0;
  for (const Step& s : steps) {
    const double recall = s.tp / pos;
    const double precision = s.tp / (s.tp + s.fp);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return area;
}

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw ShapeError("predictions and labels must align");
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i] != 0 && predictions[i] != 1) throw InvalidArgument("predictions must be binary");
    const bool p = predictions[i] == 1;
    const bool y = labels[i] == 1;
    if (p && y) ++c.tp;
    else if (p) ++c.fp;
    else if (y) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double f1_score(std::span<const int> predictions, std::span<const int> labels) {
  const ConfusionCounts c = confusion(predictions, labels);
  if (c.tp == 0) return 0.0;
  const double precision = double(c.tp) / double(c.tp + c.fp);
  const double recall = double(c.tp) / double(c.tp + c.fn);
  return 2.0 * precision * recall / (precision + recall);
}

std::vector<std::size_t> group_medoid(const std::vector<Eigen::VectorXd>& curves,
                                      std::span<const int> group, int groups) {
  if (curves.size() != group.size()) throw ShapeError("curves and groups must align");
  for (std::size_t i = 1; i < curves.size(); ++i) {
    if (curves[i].size() != curves[0].size()) throw ShapeError("curves must share one grid");
  }
  std::vector<std::vector<std::size_t>> members(groups);
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (group[i] < 0 || group[i] >= groups) throw InvalidArgument("group index out of range");
    members[group[i]].push_back(i);
  }
  std::vector<std::size_t> medoids(groups);
  for (int g = 0; g < groups; ++g) {
    if (members[g].empty()) throw EmptyGroup("group " + std::to_string(g) + " has no curves");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a : members[g]) {
      double cost = 0.0;
      for (std::size_t b : members[g]) cost += (curves[a] - curves[b]).cwiseAbs().sum();
      if (cost < best) {
        best = cost;
        medoids[g] = a;
      }
    }
  }
  return medoids;
}

SubgroupAxis parse_subgroup_axis(std::string_view text) {
  if (text == "sex") return SubgroupAxis::Sex;
  if (text == "smoke") return SubgroupAxis::Smoke;
  if (text == "age") return SubgroupAxis::Age;
  throw InvalidArgument("subgroup must be sex, smoke or age");
}

std::string age_band(double age) {
  if (age < 45.0) return "youth";
  if (age < 55.0) return "middle";
  return "elderly";
}

std::string subgroup_key(SubgroupAxis axis, const DemographicRecord& demo) {
  switch (axis) {
    case SubgroupAxis::Sex: return std::string(to_string(demo.sex));
    case SubgroupAxis::Smoke: return std::string(to_string(demo.smoking));
    case SubgroupAxis::Age: return age_band(demo.age);
  }
  return {};
}

MetricSummary summarize(std::span<const double> scores, std::span<const int> labels,
                        double threshold) {
  MetricSummary m;
  m.n = labels.size();
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  m.prevalence = m.n ? double(positives) / double(m.n) : 0.0;
  if (positives > 0 && positives < static_cast<long>(m.n)) m.auroc = auroc(scores, labels);
  if (positives > 0) m.auprc = auprc(scores, labels);
  std::vector<int> predictions(scores.size());
  std::transform(scores.begin(), scores.end(), predictions.begin(),
                 [threshold](double s) { return s > threshold ? 1 : 0; });
  m.f1 = f1_score(predictions, labels);
  return m;
}

std::map<std::string, MetricSummary> subgroup_metrics(std::span<const double> scores,
                                                      std::span<const int> labels,
                                                      std::span<const DemographicRecord> demos,
                                                      SubgroupAxis axis, double threshold) {
  if (scores.size() != labels.size() || scores.size() != demos.size()) {
    throw ShapeError("scores, labels and demographics must align");
  }
  std::map<std::string, std::pair<std::vector<double>, std::vector<int>>> slices;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto& slice = slices[subgroup_key(axis, demos[i])];
    slice.first.push_back(scores[i]);
    slice.second.push_back(labels[i]);
  }
  std::map<std::string, MetricSummary> out;
  for (const auto& [key, slice] : slices) out[key] = summarize(slice.first, slice.second, threshold);
  return out;
}

}  // namespace spiro
