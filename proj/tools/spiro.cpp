// spiro: command-line driver for the spirogram pipeline.
//
//   spiro synth         --out-dir D [--seed S --n N --noise X]
//   spiro smooth        --data-dir D --out-dir O [--window W --sigma S]
//   spiro featurize     --data-dir D --out-dir O
//   spiro train-detect  --data-dir D --out-dir O [--epochs E --k K --hidden H --channels C ...]
//   spiro train-horizon --data-dir D --model M --out-dir O
//   spiro evaluate      --data-dir D --model M --out-dir O [--subgroup sex|smoke|age]
//   spiro explain       --data-dir D --model M --out-dir O [--id ID]
//   spiro predict       --data-dir D --model M --horizon-model H --out-dir O [--threshold T]

#include "spiro/checkpoint.hpp"
#include "spiro/data.hpp"
#include "spiro/error.hpp"
#include "spiro/metrics.hpp"
#include "spiro/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spiro;

namespace {

struct Options {
  std::string out_dir = "out";
  std::string data_dir;
  std::string model;
  std::string horizon_model;
  std::string id;
  std::string subgroup;
  std::string split = "test";
  std::uint64_t seed = 0;
  int n = 400;
  double noise = 0.1;
  int window = 5;
  double sigma = 2.0;
  int k = 32;
  int hidden = 32;
  int channels = 16;
  int attention = 32;
  int epochs = 200;
  int batch = 32;
  double lr = 0.05;
  double test_fraction = 0.2;
  double threshold = 0.5;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return json::object();
  return json::parse(in, nullptr, false);
}

// Adds command, config and version to <out>/manifest.json, keeping any keys
// already written there (the cohort manifest of `synth`).
void write_manifest(const fs::path& dir, const std::string& command, const json& config) {
  json manifest = read_json_file(dir / "manifest.json");
  if (!manifest.is_object()) manifest = json::object();
  manifest["command"] = command;
  manifest["config"] = config;
  manifest["version"] = {{"spiro", SPIRO_VERSION}, {"checkpoint_format", 1}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

SmootherConfig smoother_of(const Options& o) {
  SmootherConfig cfg{o.window, o.sigma};
  cfg.validate();
  return cfg;
}

std::vector<PreparedRecord> load_prepared(const Options& o, const SmootherConfig& cfg) {
  if (o.data_dir.empty()) throw InvalidArgument("--data-dir is required");
  const std::vector<LoadedRecord> loaded = read_cohort(o.data_dir);
  return prepare_cohort(std::span<const LoadedRecord>(loaded), cfg);
}

std::vector<std::size_t> indices_of(const std::vector<PreparedRecord>& records,
                                    const std::vector<std::string>& ids) {
  std::map<std::string, std::size_t> where;
  for (std::size_t i = 0; i < records.size(); ++i) where[records[i].id] = i;
  std::vector<std::size_t> out;
  for (const std::string& id : ids) {
    const auto it = where.find(id);
    if (it == where.end()) throw ValidationError("record " + id + " is not in the data set");
    out.push_back(it->second);
  }
  return out;
}

std::vector<std::size_t> selected(const Options& o, const std::vector<PreparedRecord>& records,
                                  const DetectorCheckpoint& ckpt) {
  if (!o.id.empty()) return indices_of(records, {o.id});
  if (o.split == "test") return indices_of(records, ckpt.test_ids);
  if (o.split == "train") return indices_of(records, ckpt.train_ids);
  std::vector<std::size_t> all(records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

DetectorCheckpoint load_model(const Options& o) {
  if (o.model.empty()) throw InvalidArgument("--model is required");
  return load_detector_checkpoint(o.model);
}

json run_synth(const Options& o, const fs::path& out) {
  const CohortSpec spec = CohortSpec::balanced(o.n, o.noise, o.seed);
  const std::vector<CohortRecord> records = generate_synthetic_cohort(spec);
  write_cohort(out, spec, records);
  write_manifest(out, "synth", {{"seed", o.seed}, {"n", o.n}, {"noise", o.noise}});
  return {{"records", records.size()}};
}

json run_smooth(const Options& o, const fs::path& out) {
  const SmootherConfig cfg = smoother_of(o);
  const std::vector<PreparedRecord> records = load_prepared(o, cfg);
  std::ofstream csv(out / "volume_flow.csv", std::ios::binary);
  csv << "#spiro-volume-flow v1\nid,volume,flow\n";
  char buf[64];
  for (const PreparedRecord& r : records) {
    for (Eigen::Index i = 0; i < r.curve.volume.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g", r.curve.volume(i), r.curve.flow(i));
      csv << r.id << ',' << buf << '\n';
    }
  }
  write_manifest(out, "smooth", {{"data_dir", o.data_dir}, {"window", o.window}, {"sigma", o.sigma}});
  return {{"records", records.size()}};
}

json run_featurize(const Options& o, const fs::path& out) {
  const SmootherConfig cfg = smoother_of(o);
  const std::vector<LoadedRecord> loaded = read_cohort(o.data_dir);
  const std::vector<PreparedRecord> records = prepare_cohort(std::span<const LoadedRecord>(loaded), cfg);
  std::vector<SpiroSummary> summaries;
  for (const LoadedRecord& r : loaded) summaries.push_back(summarize_curve(r.curve, cfg));
  std::vector<char> keep(records.size(), 0);
  for (std::size_t i : qc_filter(summaries)) keep[i] = 1;

  std::ofstream csv(out / "features.csv", std::ios::binary);
  csv << "#spiro-features v1\n"
         "id,copd,horizon,pef_fef25,fef25_fef50,fef50_fef75,fef75_plus,trend,fvc,fev1,pef,qc_pass\n";
  char buf[512];
  std::size_t retained = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const PreparedRecord& r = records[i];
    const ConcavityProfile& c = r.profile;
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", c.pef_fef25,
                  c.fef25_fef50, c.fef50_fef75, c.fef75_plus, c.trend, summaries[i].fvc,
                  summaries[i].fev1, summaries[i].pef);
    csv << r.id << ',' << r.copd << ',' << (r.horizon ? to_string(*r.horizon) : "NA") << ',' << buf
        << ',' << int(keep[i]) << '\n';
    retained += keep[i];
  }
  write_manifest(out, "featurize", {{"data_dir", o.data_dir}, {"window", o.window}, {"sigma", o.sigma}});
  return {{"records", records.size()}, {"qc_retained", retained}};
}

json run_train_detect(const Options& o, const fs::path& out) {
  const SmootherConfig smoother = smoother_of(o);
  const std::vector<PreparedRecord> records = load_prepared(o, smoother);
  DetectorConfig cfg;
  cfg.k = o.k;
  cfg.hidden = o.hidden;
  cfg.channels = o.channels;
  cfg.attention = o.attention;
  cfg.validate();
  TrainConfig train;
  train.epochs = o.epochs;
  train.batch_size = o.batch;
  train.learning_rate = o.lr;
  train.seed = o.seed;
  train.validate();

  const Split split = stratified_split(cohort_strata(records), o.test_fraction, o.seed);
  std::ofstream log(out / "train_log.jsonl", std::ios::binary);
  DetectionTraining trained =
      train_detection_stage(records, split, cfg, smoother, train, [&](int epoch, double loss) {
        log << json{{"epoch", epoch}, {"loss", loss}, {"seed", o.seed}}.dump() << '\n';
      });
  trained.checkpoint.threshold = o.threshold;
  save_checkpoint(out / "detector.json", trained.checkpoint);
  write_manifest(out, "train-detect",
                 {{"data_dir", o.data_dir}, {"seed", o.seed}, {"detector", to_json(cfg)},
                  {"window", o.window}, {"sigma", o.sigma}, {"epochs", o.epochs}, {"batch", o.batch},
                  {"lr", o.lr}, {"test_fraction", o.test_fraction}, {"threshold", o.threshold}});
  return {{"train", split.train.size()},
          {"test", split.test.size()},
          {"final_loss", trained.loss_trace.empty() ? 0.0 : trained.loss_trace.back()}};
}

json run_train_horizon(const Options& o, const fs::path& out) {
  const DetectorCheckpoint detector = load_model(o);
  const std::vector<PreparedRecord> records = load_prepared(o, detector.smoother);
  TrainConfig train;
  train.epochs = o.epochs;
  train.learning_rate = o.lr;
  train.batch_size = 0;
  train.seed = o.seed;
  train.validate();
  const std::vector<std::size_t> idx = indices_of(records, detector.train_ids);
  const HorizonCheckpoint horizon = train_horizon_stage(records, idx, detector, train);
  save_checkpoint(out / "horizon.json", horizon);
  write_manifest(out, "train-horizon",
                 {{"data_dir", o.data_dir}, {"model", o.model}, {"seed", o.seed},
                  {"epochs", o.epochs}, {"lr", o.lr}});
  return {{"classes", kHorizonCount}};
}

json summary_json(const MetricSummary& m) {
  json j = {{"n", m.n}, {"prevalence", m.prevalence}, {"f1", m.f1}};
  j["auroc"] = m.auroc ? json(*m.auroc) : json(nullptr);
  j["auprc"] = m.auprc ? json(*m.auprc) : json(nullptr);
  return j;
}

json run_evaluate(const Options& o, const fs::path& out) {
  const DetectorCheckpoint ckpt = load_model(o);
  const std::vector<PreparedRecord> records = load_prepared(o, ckpt.smoother);
  const std::vector<std::size_t> idx = selected(o, records, ckpt);
  const std::vector<double> scores = detection_scores(records, idx, ckpt.config, ckpt.params);
  std::vector<int> labels;
  std::vector<DemographicRecord> demos;
  for (std::size_t i : idx) {
    labels.push_back(records[i].copd);
    demos.push_back(records[i].demographics);
  }
  const MetricSummary all = summarize(scores, labels, o.threshold);
  json metrics = summary_json(all);
  metrics["split"] = o.id.empty() ? o.split : "id";
  metrics["threshold"] = o.threshold;
  if (!o.subgroup.empty()) {
    const SubgroupAxis axis = parse_subgroup_axis(o.subgroup);
    json groups = json::object();
    for (const auto& [key, m] : subgroup_metrics(scores, labels, demos, axis, o.threshold)) {
      groups[key] = summary_json(m);
    }
    metrics["subgroup"] = {{"axis", o.subgroup}, {"groups", groups}};
  }
  write_text(out / "metrics.json", metrics.dump(2) + "\n");
  write_manifest(out, "evaluate",
                 {{"data_dir", o.data_dir}, {"model", o.model}, {"split", o.split},
                  {"threshold", o.threshold}, {"subgroup", o.subgroup}});
  return {{"split", metrics["split"]}, {"auroc", metrics["auroc"]}, {"n", all.n}};
}

json run_explain(const Options& o, const fs::path& out) {
  const DetectorCheckpoint ckpt = load_model(o);
  const std::vector<PreparedRecord> records = load_prepared(o, ckpt.smoother);
  std::vector<std::size_t> idx = selected(o, records, ckpt);
  if (idx.empty()) throw InvalidArgument("no record selected");
  const PreparedRecord& r = records[idx.front()];
  const std::vector<Eigen::MatrixXd> batch{r.series};
  const DetectionOutput det = detect(batch, ckpt.config, ckpt.params).front();
  AttentionOverlay overlay = attention_overlay(det.attention, r.curve, det.plan, det.p_hat);
  overlay.fused_risk = fuse_and_score(det.p_hat, r.demographics, ckpt.fusion).risk;
  json j = to_json(overlay);
  j["id"] = r.id;
  write_text(out / "overlay.json", j.dump(2) + "\n");
  write_text(out / "overlay.svg", render_overlay_svg(overlay, r.curve));
  write_manifest(out, "explain", {{"data_dir", o.data_dir}, {"model", o.model}, {"id", r.id}});
  return {{"id", r.id}, {"p_hat", det.p_hat}, {"patches", overlay.patches.size()}};
}

json run_predict(const Options& o, const fs::path& out) {
  const DetectorCheckpoint ckpt = load_model(o);
  std::optional<HorizonCheckpoint> horizon;
  if (!o.horizon_model.empty()) horizon = load_horizon_checkpoint(o.horizon_model);
  const std::vector<PreparedRecord> records = load_prepared(o, ckpt.smoother);
  const std::vector<std::size_t> idx = selected(o, records, ckpt);
  const std::vector<double> scores = detection_scores(records, idx, ckpt.config, ckpt.params);

  json predictions = json::array();
  std::size_t flagged = 0;
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const PreparedRecord& r = records[idx[j]];
    const bool copd = scores[j] > o.threshold;
    json entry = {{"id", r.id},
                  {"detection", {{"p_hat", scores[j]}, {"threshold", o.threshold}, {"copd", copd}}}};
    if (copd) {
      ++flagged;
    } else if (horizon) {
      const FutureFeatureVector v = record_horizon_features(r, scores[j], ckpt.fusion);
      entry["horizon"] = horizon_report(predict_future_risk(v, horizon->model), v);
    }
    predictions.push_back(std::move(entry));
  }
  write_text(out / "predictions.json", predictions.dump(2) + "\n");
  write_manifest(out, "predict",
                 {{"data_dir", o.data_dir}, {"model", o.model}, {"horizon_model", o.horizon_model},
                  {"threshold", o.threshold}, {"split", o.split}, {"id", o.id}});
  return {{"records", idx.size()}, {"detected", flagged}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spirogram COPD detection and onset-horizon prediction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SPIRO_VERSION);
  Options o;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out-dir", o.out_dir, "Directory for artifacts");
    cmd->add_option("--seed", o.seed, "Random seed");
  };
  auto add_data = [&](CLI::App* cmd) {
    cmd->add_option("--data-dir", o.data_dir, "Cohort directory")->required();
  };
  auto add_smoother = [&](CLI::App* cmd) {
    cmd->add_option("--window", o.window, "Gaussian half-width in samples");
    cmd->add_option("--sigma", o.sigma, "Gaussian sigma in samples");
  };
  auto add_model = [&](CLI::App* cmd) {
    cmd->add_option("--model", o.model, "Detector checkpoint")->required();
    cmd->add_option("--split", o.split, "test, train or all")
        ->check(CLI::IsMember({"test", "train", "all"}));
    cmd->add_option("--id", o.id, "Single record id");
    cmd->add_option("--threshold", o.threshold, "Detection threshold on p_hat");
  };

  std::map<CLI::App*, json (*)(const Options&, const fs::path&)> handlers;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort");
  add_common(synth);
  synth->add_option("--n", o.n, "Number of records")->check(CLI::PositiveNumber);
  synth->add_option("--noise", o.noise, "Template noise level");
  handlers[synth] = run_synth;

  auto* smooth = app.add_subcommand("smooth", "Smooth curves and write volume-flow samples");
  add_common(smooth);
  add_data(smooth);
  add_smoother(smooth);
  handlers[smooth] = run_smooth;

  auto* featurize = app.add_subcommand("featurize", "Concavity features and QC flags");
  add_common(featurize);
  add_data(featurize);
  add_smoother(featurize);
  handlers[featurize] = run_featurize;

  auto* train_detect = app.add_subcommand("train-detect", "Train the detection network and fusion model");
  add_common(train_detect);
  add_data(train_detect);
  add_smoother(train_detect);
  train_detect->add_option("--k", o.k, "Patch length");
  train_detect->add_option("--hidden", o.hidden, "LSTM hidden size");
  train_detect->add_option("--channels", o.channels, "Encoder channels");
  train_detect->add_option("--attention", o.attention, "Attention width");
  train_detect->add_option("--epochs", o.epochs, "Training epochs");
  train_detect->add_option("--batch", o.batch, "Mini-batch size (0 = full batch)");
  train_detect->add_option("--lr", o.lr, "Learning rate");
  train_detect->add_option("--test-fraction", o.test_fraction, "Held-out fraction");
  train_detect->add_option("--threshold", o.threshold, "Detection threshold stored with the model");
  handlers[train_detect] = run_train_detect;

  auto* train_horizon = app.add_subcommand("train-horizon", "Train the onset-horizon model");
  add_common(train_horizon);
  add_data(train_horizon);
  train_horizon->add_option("--model", o.model, "Detector checkpoint")->required();
  train_horizon->add_option("--epochs", o.epochs, "Training epochs");
  train_horizon->add_option("--lr", o.lr, "Learning rate");
  handlers[train_horizon] = run_train_horizon;

  auto* evaluate = app.add_subcommand("evaluate", "Detection metrics");
  add_common(evaluate);
  add_data(evaluate);
  add_model(evaluate);
  evaluate->add_option("--subgroup", o.subgroup, "sex, smoke or age")
      ->check(CLI::IsMember({"sex", "smoke", "age"}));
  handlers[evaluate] = run_evaluate;

  auto* explain = app.add_subcommand("explain", "Attention overlay for one record");
  add_common(explain);
  add_data(explain);
  add_model(explain);
  handlers[explain] = run_explain;

  auto* predict = app.add_subcommand("predict", "Detection verdict, then horizon for non-cases");
  add_common(predict);
  add_data(predict);
  add_model(predict);
  predict->add_option("--horizon-model", o.horizon_model, "Horizon checkpoint");
  handlers[predict] = run_predict;

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  CLI::App* cmd = app.get_subcommands().front();
  try {
    const fs::path out = o.out_dir;
    fs::create_directories(out);
    json summary = handlers.at(cmd)(o, out);
    summary["command"] = cmd->get_name();
    summary["out_dir"] = o.out_dir;
    std::cout << summary.dump() << '\n';
    return 0;
  } catch (const spiro::Error& e) {
    std::cout << json{{"error", e.kind()}, {"message", e.what()}, {"command", cmd->get_name()}}.dump()
              << '\n';
  } catch (const std::exception& e) {
    std::cout << json{{"error", "InternalError"}, {"message", e.what()}, {"command", cmd->get_name()}}
                     .dump()
              << '\n';
  }
  return 1;
}
