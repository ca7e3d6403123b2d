#include "spiro/checkpoint.hpp"

#include "spiro/error.hpp"

#include <fstream>
#include <map>

namespace spiro {
namespace {

constexpr const char* kFormat = "spiro-checkpoint";
constexpr int kVersion = 1;

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
    throw ValidationError("tensor size does not match its shape");
  }
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

nlohmann::json read_json(const std::filesystem::path& path, std::string_view kind) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  if (j.value("format", "") != kFormat || j.value("version", 0) != kVersion ||
      j.value("kind", "") != kind) {
    throw ValidationError(path.string() + " is not a " + std::string(kind) + " checkpoint");
  }
  return j;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << j.dump() << '\n';
}

}  // namespace

nlohmann::json to_json(const DetectorConfig& cfg) {
  return {{"k", cfg.k},         {"in_channels", cfg.in_channels}, {"channels", cfg.channels},
          {"hidden", cfg.hidden}, {"attention", cfg.attention},     {"kernel1", cfg.kernel1},
          {"kernel2", cfg.kernel2}};
}

DetectorConfig detector_config_from_json(const nlohmann::json& j) {
  DetectorConfig cfg;
  cfg.k = j.at("k").get<int>();
  cfg.in_channels = j.at("in_channels").get<int>();
  cfg.channels = j.at("channels").get<int>();
  cfg.hidden = j.at("hidden").get<int>();
  cfg.attention = j.at("attention").get<int>();
  cfg.kernel1 = j.at("kernel1").get<int>();
  cfg.kernel2 = j.at("kernel2").get<int>();
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const LogisticModel& model) {
  return {{"classes", model.classes},
          {"trained", model.trained},
          {"mean", matrix_json(model.standardizer.mean)},
          {"scale", matrix_json(model.standardizer.scale)},
          {"weights", matrix_json(model.weights)},
          {"bias", matrix_json(model.bias)}};
}

LogisticModel logistic_from_json(const nlohmann::json& j) {
  LogisticModel m;
  m.classes = j.at("classes").get<int>();
  m.trained = j.at("trained").get<bool>();
  m.standardizer.mean = matrix_from(j.at("mean"));
  m.standardizer.scale = matrix_from(j.at("scale"));
  m.weights = matrix_from(j.at("weights"));
  m.bias = matrix_from(j.at("bias"));
  if (m.weights.rows() != m.classes || m.bias.size() != m.classes ||
      m.standardizer.mean.size() != m.weights.cols() || m.standardizer.scale.size() != m.weights.cols()) {
    throw ValidationError("inconsistent logistic model shapes");
  }
  return m;
}

nlohmann::json tensors_to_json(const DetectorParams& params) {
  nlohmann::json out = nlohmann::json::array();
  const_cast<DetectorParams&>(params).visit([&](const std::string& name, auto& t) {
    nlohmann::json entry = matrix_json(t);
    entry["name"] = name;
    out.push_back(std::move(entry));
  });
  return out;
}

DetectorParams tensors_from_json(const nlohmann::json& j, const DetectorConfig& cfg) {
  DetectorParams params = DetectorParams::zeros(cfg);
  std::map<std::string, const nlohmann::json*> by_name;
  for (const auto& entry : j) by_name[entry.at("name").get<std::string>()] = &entry;
  params.visit([&](const std::string& name, auto& t) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw ValidationError("checkpoint is missing tensor " + name);
    const Eigen::MatrixXd m = matrix_from(*it->second);
    if (m.rows() != t.rows() || m.cols() != t.cols()) {
      throw ValidationError("tensor " + name + " has the wrong shape");
    }
    t = m;
  });
  return params;
}

void save_checkpoint(const std::filesystem::path& path, const DetectorCheckpoint& ckpt) {
  const nlohmann::json j = {
      {"format", kFormat},
      {"version", kVersion},
      {"kind", "detector"},
      {"config", to_json(ckpt.config)},
      {"smoother", {{"window", ckpt.smoother.window_half_width}, {"sigma", ckpt.smoother.sigma}}},
      {"seed", ckpt.seed},
      {"threshold", ckpt.threshold},
      {"tensors", tensors_to_json(ckpt.params)},
      {"fusion",
       {{"age_mean", ckpt.fusion.encoder.age_mean},
        {"age_scale", ckpt.fusion.encoder.age_scale},
        {"model", to_json(ckpt.fusion.model)}}},
      {"train_ids", ckpt.train_ids},
      {"test_ids", ckpt.test_ids}};
  write_json(path, j);
}

DetectorCheckpoint load_detector_checkpoint(const std::filesystem::path& path) {
  const nlohmann::json j = read_json(path, "detector");
  try {
    DetectorCheckpoint c;
    c.config = detector_config_from_json(j.at("config"));
    c.smoother.window_half_width = j.at("smoother").at("window").get<int>();
    c.smoother.sigma = j.at("smoother").at("sigma").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.threshold = j.at("threshold").get<double>();
    c.params = tensors_from_json(j.at("tensors"), c.config);
    const auto& f = j.at("fusion");
    c.fusion.encoder.age_mean = f.at("age_mean").get<double>();
    c.fusion.encoder.age_scale = f.at("age_scale").get<double>();
    c.fusion.model = logistic_from_json(f.at("model"));
    c.train_ids = j.at("train_ids").get<std::vector<std::string>>();
    c.test_ids = j.at("test_ids").get<std::vector<std::string>>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const HorizonCheckpoint& ckpt) {
  write_json(path, {{"format", kFormat},
                    {"version", kVersion},
                    {"kind", "horizon"},
                    {"seed", ckpt.seed},
                    {"model", to_json(ckpt.model.model)}});
}

HorizonCheckpoint load_horizon_checkpoint(const std::filesystem::path& path) {
  const nlohmann::json j = read_json(path, "horizon");
  try {
    HorizonCheckpoint c;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.model.model = logistic_from_json(j.at("model"));
    if (c.model.model.classes != kHorizonCount) throw ValidationError("horizon model must have 6 classes");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace spiro
