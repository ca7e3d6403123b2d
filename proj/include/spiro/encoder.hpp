#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace spiro {

/// Patch decomposition of one sequence: `patches` = ceil(L / k) and
/// `max_patches` = ceil(L_max / k).
struct PatchPlan {
  int k = 0;
  int length = 0;
  int patches = 0;
  int max_patches = 0;
};

PatchPlan patch_plan(std::size_t length, std::size_t max_length, int k);

/// Two "same"-padded 1-D convolutions with tanh, then mean pooling over the
/// patch. w1 is C x (in * kernel1), w2 is C x (C * kernel2); column blocks are
/// ordered by tap offset.
struct ConvEncoderParams {
  int in_channels = 0;
  int kernel1 = 0;
  int kernel2 = 0;
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;

  int channels() const { return static_cast<int>(w1.rows()); }

  static ConvEncoderParams zeros(int in_channels, int channels, int kernel1, int kernel2);
  static ConvEncoderParams random(int in_channels, int channels, int kernel1, int kernel2,
                                  std::mt19937_64& rng);
  ConvEncoderParams zeros_like() const;

  template <typename F>
  void visit(F&& f) {
    f("w1", w1);
    f("b1", b1);
    f("w2", w2);
    f("b2", b2);
  }

  void validate() const;
};

/// Intermediate activations kept for the backward pass, one entry per patch.
struct ConvEncoderCache {
  std::vector<Eigen::MatrixXd> cols1;  // (in * K1) x k
  std::vector<Eigen::MatrixXd> act1;   // C x k, post-tanh
  std::vector<Eigen::MatrixXd> cols2;  // (C * K2) x k
  std::vector<Eigen::MatrixXd> act2;   // C x k, post-tanh
};

/// Embeds each length-k patch of `series` (L x in_channels) into a C-vector.
/// The last patch is zero-padded to k. Returns S x C.
Eigen::MatrixXd encode_patches(const Eigen::MatrixXd& series, const PatchPlan& plan,
                               const ConvEncoderParams& params,
                               ConvEncoderCache* cache = nullptr);

/// Accumulates parameter gradients given d(loss)/d(features) (S x C).
void encode_patches_backward(const ConvEncoderCache& cache, const Eigen::MatrixXd& d_features,
                             const ConvEncoderParams& params, ConvEncoderParams& grad);

/// N x S_max x C block stored row-wise: row (i * S_max + j) holds patch j of
/// sample i. Masked slots are exactly zero.
struct MaskedPatchTensor {
  int samples = 0;
  int max_patches = 0;
  int channels = 0;
  Eigen::MatrixXd values;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> mask;  // N x S_max
  Eigen::VectorXi lengths;

  auto slot(int sample, int patch) { return values.row(sample * max_patches + patch); }
  auto slot(int sample, int patch) const { return values.row(sample * max_patches + patch); }
};

/// Valid patch rows only, in (sample, patch) order. offsets has N + 1 entries.
struct PackedFeatures {
  Eigen::MatrixXd rows;
  std::vector<int> offsets;

  int samples() const { return static_cast<int>(offsets.size()) - 1; }
  int length(int sample) const { return offsets[sample + 1] - offsets[sample]; }
};

std::pair<MaskedPatchTensor, PackedFeatures> mask_and_pack(
    const std::vector<Eigen::MatrixXd>& features, const std::vector<PatchPlan>& plans);

MaskedPatchTensor unpack(const PackedFeatures& packed, int max_patches);

}  // namespace spiro
