#include "spiro/pipeline.hpp"

#include "spiro/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace spiro {
namespace {

constexpr std::size_t kScoreBatch = 64;

}  // namespace

Eigen::MatrixXd sequence_channels(const VolumeFlowCurve& curve) {
  Eigen::MatrixXd x(curve.volume.size(), 2);
  x.col(0) = curve.volume * kVolumeChannelScale;
  x.col(1) = curve.flow * kFlowChannelScale;
  return x;
}

PreparedRecord prepare_record(const std::string& id, const TimeVolumeCurve& raw,
                              const DemographicRecord& demographics, int copd,
                              std::optional<HorizonLabel> horizon, const SmootherConfig& cfg) {
  PreparedRecord r;
  r.id = id;
  r.curve = build_volume_flow(raw, cfg);
  r.series = sequence_channels(r.curve);
  r.profile = concavity_features(r.curve);
  r.demographics = demographics;
  r.copd = copd;
  r.horizon = horizon;
  return r;
}

std::vector<PreparedRecord> prepare_cohort(std::span<const LoadedRecord> records,
                                           const SmootherConfig& cfg) {
  std::vector<PreparedRecord> out;
  out.reserve(records.size());
  for (const LoadedRecord& r : records) {
    out.push_back(prepare_record(r.id, r.curve, r.demographics, r.label.label, r.horizon, cfg));
  }
  return out;
}

std::vector<PreparedRecord> prepare_cohort(std::span<const CohortRecord> records,
                                           const SmootherConfig& cfg) {
  std::vector<PreparedRecord> out;
  out.reserve(records.size());
  for (const CohortRecord& r : records) {
    out.push_back(prepare_record(r.id, r.curve, r.demographics, r.copd, r.horizon, cfg));
  }
  return out;
}

Split stratified_split(std::span<const int> strata, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw InvalidArgument("test fraction must be in [0, 1)");
  }
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < strata.size(); ++i) groups[strata[i]].push_back(i);
  std::mt19937_64 rng(seed);
  Split split;
  for (auto& [stratum, members] : groups) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::lround(test_fraction * double(members.size())));
    split.test.insert(split.test.end(), members.begin(), members.begin() + n_test);
    split.train.insert(split.train.end(), members.begin() + n_test, members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<int> cohort_strata(std::span<const PreparedRecord> records) {
  std::vector<int> strata;
  strata.reserve(records.size());
  for (const PreparedRecord& r : records) {
    strata.push_back(r.copd ? 0 : 1 + (r.horizon ? static_cast<int>(*r.horizon) : kHorizonCount - 1));
  }
  return strata;
}

std::vector<double> detection_scores(std::span<const PreparedRecord> records,
                                     std::span<const std::size_t> indices,
                                     const DetectorConfig& cfg, const DetectorParams& params) {
  std::vector<double> scores;
  scores.reserve(indices.size());
  std::vector<Eigen::MatrixXd> batch;
  for (std::size_t start = 0; start < indices.size(); start += kScoreBatch) {
    batch.clear();
    const std::size_t stop = std::min(indices.size(), start + kScoreBatch);
    for (std::size_t i = start; i < stop; ++i) batch.push_back(records[indices[i]].series);
    for (const DetectionOutput& out : detect(batch, cfg, params)) scores.push_back(out.p_hat);
  }
  return scores;
}

DetectionTraining train_detection_stage(std::span<const PreparedRecord> records, const Split& split,
                                        const DetectorConfig& cfg, const SmootherConfig& smoother,
                                        const TrainConfig& train, const EpochCallback& on_epoch) {
  std::vector<Eigen::MatrixXd> series;
  std::vector<int> labels;
  std::vector<DemographicRecord> demos;
  for (std::size_t i : split.train) {
    series.push_back(records[i].series);
    labels.push_back(records[i].copd);
    demos.push_back(records[i].demographics);
  }
  DetectorTrainResult trained = train_detector(series, labels, cfg, train, on_epoch);

  DetectionTraining out;
  out.loss_trace = std::move(trained.loss_trace);
  DetectorCheckpoint& ckpt = out.checkpoint;
  ckpt.config = cfg;
  ckpt.smoother = smoother;
  ckpt.params = std::move(trained.params);
  ckpt.seed = train.seed;
  for (std::size_t i : split.train) ckpt.train_ids.push_back(records[i].id);
  for (std::size_t i : split.test) ckpt.test_ids.push_back(records[i].id);

  const std::vector<double> p_hat = detection_scores(records, split.train, cfg, ckpt.params);
  TrainConfig fusion_cfg;
  fusion_cfg.epochs = 300;
  fusion_cfg.learning_rate = 0.1;
  fusion_cfg.seed = train.seed;
  ckpt.fusion = train_fusion(p_hat, demos, labels, fusion_cfg);
  return out;
}

FutureFeatureVector record_horizon_features(const PreparedRecord& record, double p_hat,
                                            const FusionModel& fusion) {
  const double risk = fuse_and_score(p_hat, record.demographics, fusion).risk;
  return future_feature_vector(risk, record.profile, fusion.encoder.encode(record.demographics));
}

HorizonCheckpoint train_horizon_stage(std::span<const PreparedRecord> records,
                                      std::span<const std::size_t> indices,
                                      const DetectorCheckpoint& detector, const TrainConfig& train) {
  std::vector<std::size_t> chosen;
  for (std::size_t i : indices) {
    if (records[i].horizon) chosen.push_back(i);
  }
  const std::vector<double> p_hat = detection_scores(records, chosen, detector.config, detector.params);
  std::vector<FutureFeatureVector> features;
  std::vector<HorizonLabel> labels;
  for (std::size_t j = 0; j < chosen.size(); ++j) {
    features.push_back(record_horizon_features(records[chosen[j]], p_hat[j], detector.fusion));
    labels.push_back(*records[chosen[j]].horizon);
  }
  HorizonCheckpoint out;
  out.seed = train.seed;
  out.model = train_horizon(features, labels, train);
  return out;
}

}  // namespace spiro
