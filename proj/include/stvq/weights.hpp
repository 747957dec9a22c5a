// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stvq/config.hpp"
#include "stvq/types.hpp"

namespace stvq {

/// Pointwise linear map: y = W x + b with W of shape out x in.
struct LinearLayer {
  Mat w;
  std::vector<double> b;

  std::size_t in_dim() const { return w.cols; }
  std::size_t out_dim() const { return w.rows; }
};

/// Inference-mode batch norm: y = (x - mean) / sqrt(var + eps) * gain + bias,
/// per channel. No batch statistics are ever computed.
struct NormLayer {
  std::vector<double> mean;
  std::vector<double> var;
  std::vector<double> gain;
  std::vector<double> bias;
  double eps = 1e-5;

  std::size_t width() const { return mean.size(); }
  static NormLayer identity(std::size_t width);
};

/// Every learned layer of the forward paths, deterministically seeded.
///
/// Seeding scheme (stable across platforms): each layer draws from
/// mt19937_64 seeded with splitmix64(bundle_seed ^ fnv1a64(layer_name)).
/// Weights are uniform in [-sqrt(6/(in+out)), +sqrt(6/(in+out))], biases
/// uniform in [-0.1, 0.1].
///
/// Layer names, for a config with scales {s...}:
///   attn.s{s}.q / .k / .v      attention projections per scale
///   fuse.l1 / .l2 / .l3        multi-scale fusion stack
///   skip.l1 / .l2 / .l3        current-frame skip stack
///   ca.score.l1 / .l2 / .l3    context scoring stack (out width 1)
///   ca.inner.l1 / .l2 / .l3    context extractor, per-voxel branch
///   ca.inter.l1 / .l2 / .l3    context extractor, neighborhood branch
/// plus one NormLayer (identity statistics by default).
struct WeightBundle {
  std::uint64_t seed = 0;
  int feature_dim = 64;
  int key_dim = 64;
  int channel_dim = 64;
  std::vector<std::pair<std::string, LinearLayer>> layers;
  NormLayer norm;

  static WeightBundle seeded(const VoxelConfig& cfg, std::uint64_t seed);

  /// Throws Error when the name is absent.
  const LinearLayer& linear(const std::string& name) const;
  bool has_linear(const std::string& name) const;
};

/// y = x W^T + b row-wise; throws DimensionError on width mismatch.
Mat linear_apply(const Mat& x, const LinearLayer& layer);

void relu_inplace(Mat& x);

/// l3(relu(l2(relu(l1(x))))).
Mat stack_apply(const Mat& x, const LinearLayer& l1, const LinearLayer& l2,
                const LinearLayer& l3);

/// Convenience: looks up `prefix + ".l1" / ".l2" / ".l3"`.
Mat stack_apply(const Mat& x, const WeightBundle& w, const std::string& prefix);

Mat norm_apply(const Mat& x, const NormLayer& n);

}  // namespace stvq
