#include "spiro/phase.hpp"

#include "spiro/error.hpp"

#include <cmath>

namespace spiro {

std::string_view to_string(PhaseLabel label) {
  switch (label) {
    case PhaseLabel::PefFef25: return "PEF_FEF25";
    case PhaseLabel::Fef25Fef50: return "FEF25_FEF50";
    case PhaseLabel::Fef50Fef75: return "FEF50_FEF75";
    case PhaseLabel::Fef75Plus: return "FEF75_PLUS";
  }
  return "?";
}

Landmarks locate_landmarks(const VolumeFlowCurve& curve) {
  curve.validate();
  if ((curve.flow.array() == 0.0).all()) throw DegenerateCurve("flow is identically zero");
  Eigen::Index peak = 0;
  curve.flow.maxCoeff(&peak);  // first index on ties
  Landmarks lm;
  lm.fvc = curve.fvc();
  if (!(lm.fvc > 0.0)) throw DegenerateCurve("forced vital capacity is zero");
  lm.pef_volume = curve.volume(peak);
  lm.fef25_volume = 0.25 * lm.fvc;
  lm.fef50_volume = 0.50 * lm.fvc;
  lm.fef75_volume = 0.75 * lm.fvc;
  return lm;
}

std::array<Phase, 4> split_phases(const Landmarks& lm) {
  return {{
      {PhaseLabel::PefFef25, std::min(lm.pef_volume, lm.fef25_volume), lm.fef25_volume},
      {PhaseLabel::Fef25Fef50, lm.fef25_volume, lm.fef50_volume},
      {PhaseLabel::Fef50Fef75, lm.fef50_volume, lm.fef75_volume},
      {PhaseLabel::Fef75Plus, lm.fef75_volume, lm.fvc},
  }};
}

BaselineLine baseline_line(const VolumeFlowCurve& curve, const Phase& phase) {
  const double width = phase.end - phase.begin;
  if (!(width > 0.0)) throw EmptyPhase(std::string(to_string(phase.label)) + " has no width");
  const double f_begin = curve.flow_at(phase.begin);
  const double f_end = curve.flow_at(phase.end);
  BaselineLine line;
  line.slope = (f_end - f_begin) / width;
  line.intercept = f_begin - line.slope * phase.begin;
  return line;
}

double concavity_measure(const VolumeFlowCurve& curve, const Phase& phase, int n_grid) {
  if (n_grid < 2) throw InvalidArgument("concavity grid needs at least 2 points");
  const BaselineLine line = baseline_line(curve, phase);
  const double step = (phase.end - phase.begin) / (n_grid - 1);

  // Walk the grid and the curve knots together; both are sorted by volume.
  const Eigen::Index n = curve.volume.size();
  Eigen::Index seg = 0;
  double area = 0.0;
  for (int i = 0; i < n_grid; ++i) {
    const double v = i + 1 == n_grid ? phase.end : phase.begin + i * step;
    double f;
    if (v <= curve.volume(0)) {
      f = curve.flow(0);
    } else if (v >= curve.volume(n - 1)) {
      f = curve.flow(n - 1);
    } else {
      while (curve.volume(seg + 1) < v) ++seg;
      const double span = curve.volume(seg + 1) - curve.volume(seg);
      const double t = span > 0.0 ? (v - curve.volume(seg)) / span : 0.0;
      f = curve.flow(seg) + t * (curve.flow(seg + 1) - curve.flow(seg));
    }
    area += line(v) - f;
  }
  return area * step;
}

double concavity_trend(const ConcavityProfile& p) {
  return p.pef_fef25 + p.fef25_fef50 - p.fef50_fef75 - p.fef75_plus;
}

ConcavityProfile concavity_features(const VolumeFlowCurve& curve, int n_grid) {
  const auto phases = split_phases(locate_landmarks(curve));
  std::array<double, 4> c{};
  for (std::size_t s = 0; s < phases.size(); ++s) {
    // PEF at or beyond FEF25 leaves the early phase without width.
    c[s] = phases[s].end > phases[s].begin ? concavity_measure(curve, phases[s], n_grid) : 0.0;
  }
  ConcavityProfile profile{c[0], c[1], c[2], c[3], 0.0};
  profile.trend = concavity_trend(profile);
  return profile;
}

}  // namespace spiro
