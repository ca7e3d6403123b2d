#include "spiro/curve.hpp"

#include "spiro/error.hpp"
#include "spiro/numeric.hpp"

#include <algorithm>
#include <vector>

namespace spiro {

void TimeVolumeCurve::validate() const {
  if (volume.size() == 0) throw InvalidCurve("empty time-volume curve");
  if (volume.size() < 2) throw InvalidCurve("time-volume curve needs at least 2 samples");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidCurve("sampling interval must be positive");
  if (!volume.allFinite()) throw InvalidCurve("non-finite volume sample");
  if (volume.minCoeff() < 0.0) throw InvalidCurve("negative volume sample");
}

double VolumeFlowCurve::flow_at(double v) const { return interpolate(volume, flow, v); }

void VolumeFlowCurve::validate() const {
  if (volume.size() < 2) throw InvalidCurve("volume-flow curve needs at least 2 points");
  if (volume.size() != flow.size()) throw InvalidCurve("volume and flow lengths differ");
  if (!volume.allFinite() || !flow.allFinite()) throw InvalidCurve("non-finite volume-flow point");
  for (Eigen::Index i = 1; i < volume.size(); ++i) {
    if (volume(i) < volume(i - 1)) throw InvalidCurve("volume-flow volumes must be non-decreasing");
  }
}

void SmootherConfig::validate() const {
  if (window_half_width < 0) throw InvalidArgument("smoothing window must be >= 0");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("smoothing sigma must be > 0");
}

TimeVolumeCurve gaussian_smooth(const TimeVolumeCurve& curve, const SmootherConfig& cfg) {
  curve.validate();
  cfg.validate();
  return {gaussian_filter(curve.volume, cfg.window_half_width, cfg.sigma), curve.dt};
}

TimeFlowCurve differentiate_flow(const TimeVolumeCurve& curve) {
  curve.validate();
  const Eigen::Index n = curve.volume.size();
  TimeFlowCurve out{Eigen::VectorXd(n), curve.dt};
  out.flow.head(n - 1) = (curve.volume.tail(n - 1) - curve.volume.head(n - 1)) / curve.dt;
  out.flow(n - 1) = out.flow(n - 2);
  return out;
}

VolumeFlowCurve volume_flow_curve(const TimeVolumeCurve& volume, const TimeFlowCurve& flow) {
  volume.validate();
  if (volume.volume.size() != flow.flow.size()) {
    throw InvalidCurve("volume and flow series must have equal length");
  }
  std::vector<double> vs{volume.volume(0)};
  std::vector<double> qs{flow.flow(0)};
  for (Eigen::Index i = 1; i < volume.volume.size(); ++i) {
    const double v = volume.volume(i);
    if (v > vs.back()) {
      vs.push_back(v);
      qs.push_back(flow.flow(i));
    } else if (v < vs.back() - kVolumeTolerance) {
      throw NonMonotonicVolume("volume decreases at sample " + std::to_string(i));
    }
  }
  VolumeFlowCurve out;
  out.volume = Eigen::Map<const Eigen::VectorXd>(vs.data(), static_cast<Eigen::Index>(vs.size()));
  out.flow = Eigen::Map<const Eigen::VectorXd>(qs.data(), static_cast<Eigen::Index>(qs.size()));
  return out;
}

VolumeFlowCurve resample_on_volume_grid(const VolumeFlowCurve& curve, int n_points) {
  if (n_points < 2) throw InvalidArgument("resampling needs at least 2 points");
  curve.validate();
  const double lo = curve.volume(0);
  const double hi = curve.fvc();
  VolumeFlowCurve out;
  out.volume = Eigen::VectorXd::LinSpaced(n_points, lo, hi);
  out.volume(0) = lo;
  out.volume(n_points - 1) = hi;
  out.flow.resize(n_points);
  for (int i = 0; i < n_points; ++i) out.flow(i) = curve.flow_at(out.volume(i));
  return out;
}

VolumeFlowCurve build_volume_flow(const TimeVolumeCurve& raw, const SmootherConfig& cfg) {
  const TimeVolumeCurve smoothed = gaussian_smooth(raw, cfg);
  return volume_flow_curve(smoothed, differentiate_flow(smoothed));
}

double total_variation(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() < 2) return 0.0;
  return (x.tail(x.size() - 1) - x.head(x.size() - 1)).cwiseAbs().sum();
}

}  // namespace spiro
