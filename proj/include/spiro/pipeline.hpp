#pragma once

#include "spiro/checkpoint.hpp"
#include "spiro/curve.hpp"
#include "spiro/data.hpp"
#include "spiro/detector.hpp"
#include "spiro/fusion.hpp"
#include "spiro/phase.hpp"
#include "spiro/predict.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spiro {

/// Per-channel scales that bring volume (L) and flow (L/s) to order one.
inline constexpr double kVolumeChannelScale = 0.25;
inline constexpr double kFlowChannelScale = 0.125;

/// L x 2 network input: scaled volume and flow, one row per curve sample.
Eigen::MatrixXd sequence_channels(const VolumeFlowCurve& curve);

struct PreparedRecord {
  std::string id;
  VolumeFlowCurve curve;
  Eigen::MatrixXd series;
  ConcavityProfile profile;
  DemographicRecord demographics;
  int copd = 0;
  std::optional<HorizonLabel> horizon;
};

PreparedRecord prepare_record(const std::string& id, const TimeVolumeCurve& raw,
                              const DemographicRecord& demographics, int copd,
                              std::optional<HorizonLabel> horizon, const SmootherConfig& cfg);

std::vector<PreparedRecord> prepare_cohort(std::span<const LoadedRecord> records,
                                           const SmootherConfig& cfg);
std::vector<PreparedRecord> prepare_cohort(std::span<const CohortRecord> records,
                                           const SmootherConfig& cfg);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Shuffles each stratum with a seeded generator and holds out
/// round(test_fraction * size) of it. Both index lists come back sorted.
Split stratified_split(std::span<const int> strata, double test_fraction, std::uint64_t seed);

/// Strata for splitting: 0 for COPD, 1 + horizon index otherwise.
std::vector<int> cohort_strata(std::span<const PreparedRecord> records);

/// Detection probabilities for the selected records.
std::vector<double> detection_scores(std::span<const PreparedRecord> records,
                                     std::span<const std::size_t> indices,
                                     const DetectorConfig& cfg, const DetectorParams& params);

struct DetectionTraining {
  DetectorCheckpoint checkpoint;
  std::vector<double> loss_trace;
};

/// Trains the detector on `train` and fits the fusion model on its own
/// training-set probabilities.
DetectionTraining train_detection_stage(std::span<const PreparedRecord> records, const Split& split,
                                        const DetectorConfig& cfg, const SmootherConfig& smoother,
                                        const TrainConfig& train, const EpochCallback& on_epoch = {});

/// Fused risk plus phase features for one record.
FutureFeatureVector record_horizon_features(const PreparedRecord& record, double p_hat,
                                            const FusionModel& fusion);

/// Fits the horizon model on the non-COPD records among `indices`.
HorizonCheckpoint train_horizon_stage(std::span<const PreparedRecord> records,
                                      std::span<const std::size_t> indices,
                                      const DetectorCheckpoint& detector, const TrainConfig& train);

}  // namespace spiro
