#pragma once

#include "spiro/curve.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

namespace spiro::test {

inline Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// Random piecewise-linear volume-flow curve on [0, span] with `knots` segments.
inline VolumeFlowCurve random_polyline(std::mt19937_64& rng, int knots, double span = 4.0) {
  std::uniform_real_distribution<double> flow(0.2, 6.0);
  std::uniform_real_distribution<double> gap(0.2, 1.0);
  std::vector<double> v{0.0};
  for (int i = 0; i < knots; ++i) v.push_back(v.back() + gap(rng));
  VolumeFlowCurve c;
  c.volume.resize(static_cast<Eigen::Index>(v.size()));
  c.flow.resize(c.volume.size());
  for (Eigen::Index i = 0; i < c.volume.size(); ++i) {
    c.volume(i) = v[i] * span / v.back();
    c.flow(i) = flow(rng);
  }
  return c;
}

inline std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    for (std::size_t m = i; m <= j; ++m) r[order[m]] = 0.5 * double(i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const std::vector<double> ra = ranks(a);
  const std::vector<double> rb = ranks(b);
  const double n = double(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  return num / std::sqrt(da * db);
}

// P(score_pos > score_neg) + 0.5 P(tie) over every positive/negative pair.
inline double all_pairs_auroc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

// Sum over every distinct threshold t (descending) of delta-recall * precision
// for the rule score >= t.
inline double enumerated_auprc(const std::vector<double>& s, const std::vector<int>& y) {
  std::vector<double> thresholds = s;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  const double positives = double(std::count(y.begin(), y.end(), 1));
  double area = 0.0, prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0.0, fp = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= t) (y[i] ? tp : fp) += 1.0;
    }
    const double recall = tp / positives;
    area += (recall - prev_recall) * tp / (tp + fp);
    prev_recall = recall;
  }
  return area;
}

}  // namespace spiro::test
