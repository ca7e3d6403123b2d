#include "spiro/encoder.hpp"

#include "spiro/error.hpp"

#include <cmath>
#include <string>

namespace spiro {
namespace {

// Column t of the result stacks x(t + o, :) for o = -r..r, zero outside [0, k).
// `x` is positions x channels.
Eigen::MatrixXd im2col(const Eigen::MatrixXd& x, int kernel) {
  const int k = static_cast<int>(x.rows());
  const int ch = static_cast<int>(x.cols());
  const int r = kernel / 2;
  Eigen::MatrixXd cols = Eigen::MatrixXd::Zero(ch * kernel, k);
  for (int t = 0; t < k; ++t) {
    for (int o = 0; o < kernel; ++o) {
      const int src = t + o - r;
      if (src < 0 || src >= k) continue;
      cols.block(o * ch, t, ch, 1) = x.row(src).transpose();
    }
  }
  return cols;
}

// Adjoint of im2col: returns positions x channels.
Eigen::MatrixXd col2im(const Eigen::MatrixXd& cols, int kernel, int ch) {
  const int k = static_cast<int>(cols.cols());
  const int r = kernel / 2;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(k, ch);
  for (int t = 0; t < k; ++t) {
    for (int o = 0; o < kernel; ++o) {
      const int src = t + o - r;
      if (src < 0 || src >= k) continue;
      x.row(src) += cols.block(o * ch, t, ch, 1).transpose();
    }
  }
  return x;
}

Eigen::MatrixXd uniform(Eigen::Index rows, Eigen::Index cols, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

}  // namespace

PatchPlan patch_plan(std::size_t length, std::size_t max_length, int k) {
  if (length == 0) throw InvalidArgument("sequence length must be >= 1");
  if (k <= 0) throw InvalidArgument("patch length k must be >= 1");
  if (max_length < length) throw InvalidArgument("maximum length is shorter than the sequence");
  const auto ceil_div = [k](std::size_t n) { return static_cast<int>((n + k - 1) / k); };
  return {k, static_cast<int>(length), ceil_div(length), ceil_div(max_length)};
}

ConvEncoderParams ConvEncoderParams::zeros(int in_channels, int channels, int kernel1, int kernel2) {
  if (in_channels < 1 || channels < 1 || kernel1 < 1 || kernel2 < 1 || kernel1 % 2 == 0 ||
      kernel2 % 2 == 0) {
    throw InvalidParams("encoder shape must be positive with odd kernels");
  }
  ConvEncoderParams p;
  p.in_channels = in_channels;
  p.kernel1 = kernel1;
  p.kernel2 = kernel2;
  p.w1 = Eigen::MatrixXd::Zero(channels, in_channels * kernel1);
  p.b1 = Eigen::VectorXd::Zero(channels);
  p.w2 = Eigen::MatrixXd::Zero(channels, channels * kernel2);
  p.b2 = Eigen::VectorXd::Zero(channels);
  return p;
}

ConvEncoderParams ConvEncoderParams::random(int in_channels, int channels, int kernel1,
                                            int kernel2, std::mt19937_64& rng) {
  ConvEncoderParams p = zeros(in_channels, channels, kernel1, kernel2);
  p.w1 = uniform(p.w1.rows(), p.w1.cols(), std::sqrt(3.0 / p.w1.cols()), rng);
  p.w2 = uniform(p.w2.rows(), p.w2.cols(), std::sqrt(3.0 / p.w2.cols()), rng);
  return p;
}

ConvEncoderParams ConvEncoderParams::zeros_like() const {
  return zeros(in_channels, channels(), kernel1, kernel2);
}

void ConvEncoderParams::validate() const {
  const int c = channels();
  if (w1.cols() != in_channels * kernel1 || b1.size() != c || w2.rows() != c ||
      w2.cols() != c * kernel2 || b2.size() != c) {
    throw InvalidParams("inconsistent encoder parameter shapes");
  }
  if (!w1.allFinite() || !b1.allFinite() || !w2.allFinite() || !b2.allFinite()) {
    throw InvalidParams("non-finite encoder parameters");
  }
}

Eigen::MatrixXd encode_patches(const Eigen::MatrixXd& series, const PatchPlan& plan,
                               const ConvEncoderParams& params, ConvEncoderCache* cache) {
  if (series.rows() != plan.length || series.cols() != params.in_channels) {
    throw ShapeError("series is " + std::to_string(series.rows()) + "x" +
                     std::to_string(series.cols()) + ", plan expects length " +
                     std::to_string(plan.length) + " with " +
                     std::to_string(params.in_channels) + " channels");
  }
  const int k = plan.k;
  if (plan.patches != (plan.length + k - 1) / k) throw ShapeError("patch count does not match length");
  const int c = params.channels();

  Eigen::MatrixXd features(plan.patches, c);
  if (cache) *cache = {};
  for (int s = 0; s < plan.patches; ++s) {
    const int start = s * k;
    const int take = std::min(k, plan.length - start);
    Eigen::MatrixXd patch = Eigen::MatrixXd::Zero(k, params.in_channels);
    patch.topRows(take) = series.middleRows(start, take);

    Eigen::MatrixXd cols1 = im2col(patch, params.kernel1);
    Eigen::MatrixXd act1 = ((params.w1 * cols1).colwise() + params.b1).array().tanh().matrix();
    Eigen::MatrixXd cols2 = im2col(act1.transpose(), params.kernel2);
    Eigen::MatrixXd act2 = ((params.w2 * cols2).colwise() + params.b2).array().tanh().matrix();
    features.row(s) = act2.rowwise().mean().transpose();

    if (cache) {
      cache->cols1.push_back(std::move(cols1));
      cache->act1.push_back(std::move(act1));
      cache->cols2.push_back(std::move(cols2));
      cache->act2.push_back(std::move(act2));
    }
  }
  return features;
}

void encode_patches_backward(const ConvEncoderCache& cache, const Eigen::MatrixXd& d_features,
                             const ConvEncoderParams& params, ConvEncoderParams& grad) {
  const int c = params.channels();
  for (std::size_t s = 0; s < cache.act2.size(); ++s) {
    const Eigen::MatrixXd& act2 = cache.act2[s];
    const Eigen::Index k = act2.cols();
    const Eigen::VectorXd d_mean = d_features.row(static_cast<Eigen::Index>(s)).transpose() / double(k);
    Eigen::MatrixXd d_pre2 = (1.0 - act2.array().square()).matrix();
    d_pre2.array().colwise() *= d_mean.array();
    grad.w2.noalias() += d_pre2 * cache.cols2[s].transpose();
    grad.b2 += d_pre2.rowwise().sum();

    const Eigen::MatrixXd d_cols2 = params.w2.transpose() * d_pre2;
    const Eigen::MatrixXd d_act1 = col2im(d_cols2, params.kernel2, c).transpose();
    const Eigen::MatrixXd d_pre1 =
        (d_act1.array() * (1.0 - cache.act1[s].array().square())).matrix();
    grad.w1.noalias() += d_pre1 * cache.cols1[s].transpose();
    grad.b1 += d_pre1.rowwise().sum();
  }
}

std::pair<MaskedPatchTensor, PackedFeatures> mask_and_pack(
    const std::vector<Eigen::MatrixXd>& features, const std::vector<PatchPlan>& plans) {
  if (features.size() != plans.size()) throw ShapeError("features and plans are not aligned");
  if (features.empty()) throw ShapeError("no samples to pack");
  const int n = static_cast<int>(features.size());
  const int s_max = plans.front().max_patches;
  const int c = static_cast<int>(features.front().cols());

  MaskedPatchTensor tensor;
  tensor.samples = n;
  tensor.max_patches = s_max;
  tensor.channels = c;
  tensor.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n) * s_max, c);
  tensor.mask = decltype(tensor.mask)::Zero(n, s_max);
  tensor.lengths = Eigen::VectorXi::Zero(n);

  PackedFeatures packed;
  packed.offsets.assign(1, 0);
  int total = 0;
  for (int i = 0; i < n; ++i) {
    const PatchPlan& plan = plans[i];
    if (plan.max_patches != s_max) throw PlanViolation("plans disagree on the maximum patch count");
    if (plan.patches > s_max) {
      throw PlanViolation("sample " + std::to_string(i) + " has " + std::to_string(plan.patches) +
                          " patches, more than the maximum " + std::to_string(s_max));
    }
    if (features[i].rows() != plan.patches || features[i].cols() != c) {
      throw ShapeError("sample " + std::to_string(i) + " features do not match its plan");
    }
    for (int j = 0; j < plan.patches; ++j) {
      tensor.mask(i, j) = 1;
      tensor.slot(i, j) = features[i].row(j);
    }
    tensor.lengths(i) = plan.patches;
    total += plan.patches;
    packed.offsets.push_back(total);
  }

  packed.rows.resize(total, c);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < tensor.lengths(i); ++j) packed.rows.row(packed.offsets[i] + j) = tensor.slot(i, j);
  }
  return {std::move(tensor), std::move(packed)};
}

MaskedPatchTensor unpack(const PackedFeatures& packed, int max_patches) {
  const int n = packed.samples();
  const int c = static_cast<int>(packed.rows.cols());
  MaskedPatchTensor tensor;
  tensor.samples = n;
  tensor.max_patches = max_patches;
  tensor.channels = c;
  tensor.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n) * max_patches, c);
  tensor.mask = decltype(tensor.mask)::Zero(n, max_patches);
  tensor.lengths = Eigen::VectorXi::Zero(n);
  for (int i = 0; i < n; ++i) {
    const int len = packed.length(i);
    if (len > max_patches) throw PlanViolation("packed sample exceeds the maximum patch count");
    tensor.lengths(i) = len;
    for (int j = 0; j < len; ++j) {
      tensor.mask(i, j) = 1;
      tensor.slot(i, j) = packed.rows.row(packed.offsets[i] + j);
    }
  }
  return tensor;
}

}  // namespace spiro
