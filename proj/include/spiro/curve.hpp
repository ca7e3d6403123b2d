#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>

namespace spiro {

inline constexpr double kDefaultSampleInterval = 0.010;  // seconds
inline constexpr double kVolumeTolerance = 1e-9;         // liters

/// Exhaled volume (liters) sampled every `dt` seconds.
struct TimeVolumeCurve {
  Eigen::VectorXd volume;
  double dt = kDefaultSampleInterval;

  std::size_t size() const { return static_cast<std::size_t>(volume.size()); }

  /// Throws InvalidCurve unless length >= 2, dt > 0 and every sample is
  /// finite and non-negative.
  void validate() const;
};

/// Flow (liters/second) on the same time grid as its source volume curve.
struct TimeFlowCurve {
  Eigen::VectorXd flow;
  double dt = kDefaultSampleInterval;

  std::size_t size() const { return static_cast<std::size_t>(flow.size()); }
};

/// Flow as a function of exhaled volume. Volumes are strictly increasing.
struct VolumeFlowCurve {
  Eigen::VectorXd volume;
  Eigen::VectorXd flow;

  std::size_t size() const { return static_cast<std::size_t>(volume.size()); }
  double fvc() const { return volume(volume.size() - 1); }

  /// Linear interpolation of flow at `v`, clamped to the end points.
  double flow_at(double v) const;

  /// Throws InvalidCurve unless length >= 2, sizes agree, values are finite
  /// and volumes are non-decreasing.
  void validate() const;
};

struct SmootherConfig {
  int window_half_width = 5;  // samples
  double sigma = 2.0;         // samples

  void validate() const;
};

/// Gaussian-weighted moving average of a series. Windows are truncated at the
/// boundaries and the weights renormalised over the samples actually used.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> gaussian_filter(
    const Eigen::MatrixBase<Derived>& x, int half_width, double sigma) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = x.size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> kernel(2 * half_width + 1);
  for (int j = -half_width; j <= half_width; ++j) {
    kernel(j + half_width) = Scalar(std::exp(-0.5 * (j * j) / (sigma * sigma)));
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - half_width);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + half_width);
    Scalar num(0);
    Scalar den(0);
    for (Eigen::Index m = lo; m <= hi; ++m) {
      const Scalar g = kernel(m - i + half_width);
      num += g * x(m);
      den += g;
    }
    y(i) = num / den;
  }
  return y;
}

TimeVolumeCurve gaussian_smooth(const TimeVolumeCurve& curve,
                                const SmootherConfig& cfg = {});

/// Forward difference (V[i+1] - V[i]) / dt; the last sample repeats the one
/// before it so the flow stays aligned with the volume samples.
TimeFlowCurve differentiate_flow(const TimeVolumeCurve& curve);

/// Pairs each volume sample with its flow. Plateaus (no volume gain) keep only
/// the first sample. A drop of more than kVolumeTolerance throws
/// NonMonotonicVolume.
VolumeFlowCurve volume_flow_curve(const TimeVolumeCurve& volume,
                                  const TimeFlowCurve& flow);

/// Linear resampling onto `n_points` uniformly spaced volumes spanning the
/// curve's own volume range.
VolumeFlowCurve resample_on_volume_grid(const VolumeFlowCurve& curve,
                                        int n_points);

/// smooth -> differentiate -> volume-flow.
VolumeFlowCurve build_volume_flow(const TimeVolumeCurve& raw,
                                  const SmootherConfig& cfg = {});

/// Sum of absolute successive differences.
double total_variation(const Eigen::Ref<const Eigen::VectorXd>& x);

}  // namespace spiro
