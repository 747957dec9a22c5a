// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "stvq/context_activator.hpp"
#include "stvq/hash_index.hpp"
#include "stvq/svaq.hpp"
#include "stvq/voxelizer.hpp"
#include "stvq/weights.hpp"

namespace stvq::oracle {

// Brute-force references used by tests and benchmarks. None of these touch
// the hash index, the kernel table or the layer-application helpers: the
// math here is straight-line loops over the raw data, so agreement with the
// production paths is evidence rather than tautology.

/// Quadratic coordinate scan with the same output contract as query().
QueryAlignment brute_match(const VoxelSet& current, const VoxelSet& hist);

/// Exact k nearest reference points per query point by Euclidean distance,
/// ties broken by lower reference index. When k exceeds the reference count,
/// all points are returned and the rest padded with -1.
std::vector<std::vector<std::int32_t>> knn_points(const std::vector<Point>& query_pts,
                                                  const std::vector<Point>& ref_pts,
                                                  std::size_t k);

struct ForwardReference {
  std::vector<Mat> t_per_scale;
  Mat t_o;
  Mat o_v;
  std::vector<double> scores;             // context scores, context order
  std::vector<std::uint32_t> retained;    // rows into the context set
  Mat o_c;
  std::vector<std::uint32_t> o_c_points;  // into the historical cloud
};

struct ForwardOptions {
  bool paired = false;
  double threshold = 0.1;
  bool train_mode = false;
  /// When >= 0, retain this many top-scoring voxels instead of thresholding.
  std::int64_t target_count = -1;
  bool neighborhood_pool = false;
};

/// Re-evaluates the whole forward path (per-scale attention, fusion, skip,
/// norm, propagation, context scoring / selection / extraction) as dense
/// straight-line math, including its own coordinate matching.
ForwardReference dense_forward_reference(const std::vector<VoxelSet>& current_sets,
                                         const std::vector<VoxelSet>& hist_sets,
                                         const WeightBundle& w,
                                         const ForwardOptions& opt = {});

}  // namespace stvq::oracle
