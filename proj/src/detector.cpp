#include "spiro/detector.hpp"

#include "spiro/error.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace spiro {

void DetectorConfig::validate() const {
  if (k < 1 || in_channels < 1 || channels < 1 || hidden < 1 || attention < 1) {
    throw InvalidArgument("detector sizes must be positive");
  }
  if (kernel1 < 1 || kernel2 < 1 || kernel1 % 2 == 0 || kernel2 % 2 == 0) {
    throw InvalidArgument("convolution kernels must be odd");
  }
}

DetectorParams DetectorParams::random(const DetectorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  DetectorParams p;
  p.encoder = ConvEncoderParams::random(cfg.in_channels, cfg.channels, cfg.kernel1, cfg.kernel2, rng);
  p.lstm = BiLstmParams::random(cfg.channels, cfg.hidden, rng);
  p.attention = AttentionParams::random(2 * cfg.hidden, cfg.attention, rng);
  p.head = HeadParams::random(2 * cfg.hidden, rng);
  return p;
}

DetectorParams DetectorParams::zeros(const DetectorConfig& cfg) {
  cfg.validate();
  DetectorParams p;
  p.encoder = ConvEncoderParams::zeros(cfg.in_channels, cfg.channels, cfg.kernel1, cfg.kernel2);
  p.lstm = BiLstmParams::zeros(cfg.channels, cfg.hidden);
  p.attention = AttentionParams::zeros(2 * cfg.hidden, cfg.attention);
  p.head = HeadParams::zeros(2 * cfg.hidden);
  return p;
}

DetectorParams DetectorParams::zeros_like() const {
  DetectorParams p;
  p.encoder = encoder.zeros_like();
  p.lstm = lstm.zeros_like();
  p.attention = attention.zeros_like();
  p.head = head.zeros_like();
  return p;
}

Eigen::Index DetectorParams::size() const {
  Eigen::Index n = 0;
  const_cast<DetectorParams*>(this)->visit([&](const std::string&, auto& t) { n += t.size(); });
  return n;
}

Eigen::VectorXd DetectorParams::flatten() const {
  Eigen::VectorXd flat(size());
  Eigen::Index at = 0;
  const_cast<DetectorParams*>(this)->visit([&](const std::string&, auto& t) {
    flat.segment(at, t.size()) = Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
    at += t.size();
  });
  return flat;
}

void DetectorParams::assign(const Eigen::VectorXd& flat) {
  if (flat.size() != size()) throw ShapeError("flat parameter vector has the wrong size");
  Eigen::Index at = 0;
  visit([&](const std::string&, auto& t) {
    Eigen::Map<Eigen::VectorXd>(t.data(), t.size()) = flat.segment(at, t.size());
    at += t.size();
  });
}

namespace {

struct BatchState {
  std::vector<PatchPlan> plans;
  std::vector<ConvEncoderCache> encoder_caches;
  PackedFeatures packed;
  BiLstmCache lstm_cache;
  Eigen::MatrixXd lstm_out;
  std::vector<Eigen::MatrixXd> blocks;  // per sample S_max x 2H, zero on masked slots
  std::vector<AttentionCache> attention_caches;
  std::vector<DetectionOutput> outputs;
  MaskedPatchTensor tensor;
};

BatchState forward(std::span<const Eigen::MatrixXd> series, const DetectorConfig& cfg,
                   const DetectorParams& params, bool keep_caches) {
  cfg.validate();
  if (series.empty()) throw EmptySequence("empty batch");
  std::size_t max_len = 0;
  for (const Eigen::MatrixXd& s : series) max_len = std::max<std::size_t>(max_len, s.rows());

  BatchState st;
  const std::size_t n = series.size();
  std::vector<Eigen::MatrixXd> features(n);
  st.plans.resize(n);
  if (keep_caches) st.encoder_caches.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    st.plans[i] = patch_plan(series[i].rows(), max_len, cfg.k);
    features[i] = encode_patches(series[i], st.plans[i], params.encoder,
                                 keep_caches ? &st.encoder_caches[i] : nullptr);
  }
  auto [tensor, packed] = mask_and_pack(features, st.plans);
  st.tensor = std::move(tensor);
  st.packed = std::move(packed);
  st.lstm_out = bilstm_forward(st.packed, params.lstm, keep_caches ? &st.lstm_cache : nullptr);

  const int s_max = st.tensor.max_patches;
  const int width = params.lstm.output_size();
  st.blocks.resize(n);
  st.attention_caches.resize(n);
  st.outputs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::MatrixXd& block = st.blocks[i];
    block = Eigen::MatrixXd::Zero(s_max, width);
    const int len = st.packed.length(static_cast<int>(i));
    block.topRows(len) = st.lstm_out.middleRows(st.packed.offsets[i], len);
    std::vector<std::uint8_t> mask(s_max);
    for (int j = 0; j < s_max; ++j) mask[j] = st.tensor.mask(static_cast<Eigen::Index>(i), j);

    DetectionOutput& out = st.outputs[i];
    out.plan = st.plans[i];
    out.attention = volume_attention(block, params.attention, mask, &st.attention_caches[i]);
    out.p_hat = detection_head(out.attention.context, params.head);
  }
  return st;
}

}  // namespace

std::vector<DetectionOutput> detect(std::span<const Eigen::MatrixXd> series,
                                    const DetectorConfig& cfg, const DetectorParams& params) {
  return forward(series, cfg, params, false).outputs;
}

double detection_loss(std::span<const Eigen::MatrixXd> series, std::span<const int> labels,
                      const DetectorConfig& cfg, const DetectorParams& params,
                      DetectorParams* grad) {
  if (series.size() != labels.size()) throw ShapeError("series and labels must align");
  BatchState st = forward(series, cfg, params, grad != nullptr);
  const std::size_t n = series.size();
  const double inv_n = 1.0 / double(n);

  double loss = 0.0;
  Eigen::MatrixXd d_lstm_out;
  if (grad) d_lstm_out = Eigen::MatrixXd::Zero(st.lstm_out.rows(), st.lstm_out.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y != 0 && y != 1) throw InvalidArgument("detection labels must be 0 or 1");
    const Eigen::VectorXd& context = st.outputs[i].attention.context;
    const Eigen::Vector2d probs = detection_head_probs(context, params.head);
    loss += -std::log(std::max(probs(y), 1e-300));
    if (!grad) continue;

    Eigen::Vector2d d_logits = probs * inv_n;
    d_logits(y) -= inv_n;
    grad->head.w.noalias() += d_logits * context.transpose();
    grad->head.b += d_logits;
    const Eigen::VectorXd d_context = params.head.w.transpose() * d_logits;
    const Eigen::MatrixXd d_block = volume_attention_backward(
        st.blocks[i], st.outputs[i].attention, st.attention_caches[i], d_context,
        params.attention, grad->attention);
    const int len = st.packed.length(static_cast<int>(i));
    d_lstm_out.middleRows(st.packed.offsets[i], len) += d_block.topRows(len);
  }
  if (grad) {
    const Eigen::MatrixXd d_packed =
        bilstm_backward(st.packed, st.lstm_cache, d_lstm_out, params.lstm, grad->lstm);
    for (std::size_t i = 0; i < n; ++i) {
      const int len = st.packed.length(static_cast<int>(i));
      encode_patches_backward(st.encoder_caches[i], d_packed.middleRows(st.packed.offsets[i], len),
                              params.encoder, grad->encoder);
    }
  }
  return loss * inv_n;
}

DetectorTrainResult train_detector(std::span<const Eigen::MatrixXd> series,
                                   std::span<const int> labels, const DetectorConfig& cfg,
                                   const TrainConfig& train, const EpochCallback& on_epoch) {
  train.validate();
  if (series.size() != labels.size() || series.empty()) throw ShapeError("series and labels must align");
  if (std::all_of(labels.begin(), labels.end(), [&](int y) { return y == labels[0]; })) {
    throw DegenerateLabels("detection labels contain a single class");
  }

  DetectorTrainResult result;
  result.params = DetectorParams::random(cfg, train.seed);
  DetectorParams& params = result.params;

  const std::size_t n = series.size();
  const std::size_t batch = train.batch_size == 0 ? n : std::min<std::size_t>(train.batch_size, n);
  std::mt19937_64 rng(train.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<Eigen::MatrixXd> batch_series;
  std::vector<int> batch_labels;
  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(start + batch, n);
      batch_series.clear();
      batch_labels.clear();
      for (std::size_t t = start; t < stop; ++t) {
        batch_series.push_back(series[order[t]]);
        batch_labels.push_back(labels[order[t]]);
      }
      DetectorParams grad = params.zeros_like();
      epoch_loss += detection_loss(batch_series, batch_labels, cfg, params, &grad);
      ++batches;
      Eigen::VectorXd flat = params.flatten();
      const Eigen::VectorXd g = grad.flatten();
      flat -= train.learning_rate * (g + train.l2 * flat);
      params.assign(flat);
    }
    const double mean_loss = epoch_loss / batches;
    result.loss_trace.push_back(mean_loss);
    if (on_epoch) on_epoch(epoch, mean_loss);
  }
  return result;
}

}  // namespace spiro
