#pragma once

#include "spiro/curve.hpp"

#include <array>
#include <string_view>

namespace spiro {

/// Volume landmarks of a forced exhalation, all in liters.
struct Landmarks {
  double fvc = 0.0;
  double pef_volume = 0.0;
  double fef25_volume = 0.0;
  double fef50_volume = 0.0;
  double fef75_volume = 0.0;
};

enum class PhaseLabel { PefFef25, Fef25Fef50, Fef50Fef75, Fef75Plus };

std::string_view to_string(PhaseLabel label);

/// A volume interval [begin, end] of the volume-flow curve.
struct Phase {
  PhaseLabel label = PhaseLabel::PefFef25;
  double begin = 0.0;
  double end = 0.0;
};

/// Chord through the curve at a phase's two end volumes.
struct BaselineLine {
  double slope = 0.0;
  double intercept = 0.0;

  double operator()(double v) const { return slope * v + intercept; }
};

/// Signed areas between each phase's chord and the curve (liter * liter/s).
/// Positive means the curve sags below its chord.
struct ConcavityProfile {
  double pef_fef25 = 0.0;
  double fef25_fef50 = 0.0;
  double fef50_fef75 = 0.0;
  double fef75_plus = 0.0;
  double trend = 0.0;

  std::array<double, 4> by_phase() const {
    return {pef_fef25, fef25_fef50, fef50_fef75, fef75_plus};
  }
};

inline constexpr int kDefaultConcavityGrid = 1000;

/// PEF is the first sample of maximal flow; FEFxx sit at xx% of FVC, where FVC
/// is the last volume. Throws DegenerateCurve when the flow is identically zero.
Landmarks locate_landmarks(const VolumeFlowCurve& curve);

/// The four phases implied by the landmarks. The first phase is empty
/// (begin == end) when PEF occurs after FEF25.
std::array<Phase, 4> split_phases(const Landmarks& landmarks);

BaselineLine baseline_line(const VolumeFlowCurve& curve, const Phase& phase);

/// Sum over a uniform grid of `n_grid` volumes in the phase of
/// (baseline - flow) * grid spacing.
double concavity_measure(const VolumeFlowCurve& curve, const Phase& phase,
                         int n_grid = kDefaultConcavityGrid);

/// Early-phase concavity minus late-phase concavity.
double concavity_trend(const ConcavityProfile& profile);

ConcavityProfile concavity_features(const VolumeFlowCurve& curve,
                                    int n_grid = kDefaultConcavityGrid);

}  // namespace spiro
