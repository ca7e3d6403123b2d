#pragma once

#include "spiro/curve.hpp"
#include "spiro/detector.hpp"
#include "spiro/fusion.hpp"
#include "spiro/logistic.hpp"
#include "spiro/predict.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace spiro {

nlohmann::json to_json(const DetectorConfig& cfg);
DetectorConfig detector_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const LogisticModel& model);
LogisticModel logistic_from_json(const nlohmann::json& j);

/// `[{name, rows, cols, data}]` in visit order.
nlohmann::json tensors_to_json(const DetectorParams& params);
/// Throws ValidationError when a tensor is missing or has the wrong shape.
DetectorParams tensors_from_json(const nlohmann::json& j, const DetectorConfig& cfg);

/// Everything needed to reproduce a detection run.
struct DetectorCheckpoint {
  DetectorConfig config;
  SmootherConfig smoother;
  DetectorParams params;
  FusionModel fusion;
  std::uint64_t seed = 0;
  double threshold = 0.5;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

struct HorizonCheckpoint {
  HorizonModel model;
  std::uint64_t seed = 0;
};

void save_checkpoint(const std::filesystem::path& path, const DetectorCheckpoint& ckpt);
DetectorCheckpoint load_detector_checkpoint(const std::filesystem::path& path);

void save_checkpoint(const std::filesystem::path& path, const HorizonCheckpoint& ckpt);
HorizonCheckpoint load_horizon_checkpoint(const std::filesystem::path& path);

}  // namespace spiro
