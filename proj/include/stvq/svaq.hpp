// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "stvq/hash_index.hpp"
#include "stvq/types.hpp"
#include "stvq/voxelizer.hpp"
#include "stvq/weights.hpp"

namespace stvq::svaq {

/// dense: every current voxel attends over all matched historical voxels.
/// paired: each current voxel attends only to its own matched voxel; linear
/// in voxel count, intended for large inputs.
enum class AttentionMode { dense, paired };

struct AttentionOutput {
  Mat t;  // |V^c| rows of width d_k
  int scale = 1;
};

/// Scaled dot-product attention between current voxels (queries) and their
/// aligned historical voxels (keys/values). Placeholder keys are masked out
/// of the softmax; rows with no unmasked key come out all-zero. When
/// attn_weights is given it receives the full weight matrix (masked keys
/// hold exact zeros).
AttentionOutput attention(const VoxelSet& current, const QueryAlignment& alignment,
                          const VoxelSet& hist, const WeightBundle& w,
                          AttentionMode mode = AttentionMode::dense,
                          Mat* attn_weights = nullptr);

/// Scatters the coarse-scale attention outputs onto the fine (scale-1) rows
/// by coordinate floor-division, concatenates channel-wise with the fine
/// output, and applies the fusion stack. current_sets[0] is the fine set;
/// sets and outputs are index-aligned per scale.
Mat fuse(const std::vector<AttentionOutput>& per_scale,
         const std::vector<const VoxelSet*>& current_sets, const WeightBundle& w);

struct ForwardResult {
  Mat o_v;  // one row per current point, width N_C
  std::vector<QueryAlignment> alignments;  // per scale
};

/// Full path: per-scale attention, fusion, current skip stack, norm, and
/// propagation of voxel rows to the current points.
ForwardResult forward(const std::vector<VoxelSet>& current_sets,
                      const std::vector<VoxelSet>& hist_sets, const WeightBundle& w,
                      AttentionMode mode = AttentionMode::dense);

}  // namespace stvq::svaq
