// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "stvq/types.hpp"
#include "stvq/voxelizer.hpp"
#include "stvq/weights.hpp"

namespace stvq::ca {

enum class Mode { train, infer };

/// Context voxels with one sigmoid score each, in context-set order.
struct ScoredContext {
  VoxelSet voxels;
  std::vector<double> scores;  // in (0, 1)
};

/// Surviving context voxels. Features are the originals scaled per voxel by
/// its score; source_rows maps back into the scored set. In infer mode every
/// retained score exceeds the threshold; train mode retains everything.
struct ActivatedContext {
  VoxelSet voxels;
  std::vector<double> scores;
  std::vector<std::uint32_t> source_rows;

  std::size_t retained_count() const { return voxels.size(); }
};

/// Scores context voxels against the current voxels: the two sets are
/// concatenated (context rows first, then current rows, zero-padded to the
/// wider feature width), pushed through the scoring stack and a sigmoid, and
/// the context slice of the result is kept. Both sets must be at scale 1.
ScoredContext score(const VoxelSet& context, const VoxelSet& current,
                    const WeightBundle& w);

/// Scales each voxel's features by its score, then drops voxels with
/// score <= threshold (infer) or keeps all of them (train).
ActivatedContext activate(const ScoredContext& scored, double threshold, Mode mode);

/// Keeps the target_count highest-scoring voxels, ties broken by lower voxel
/// index; equivalent to activate at some threshold. Requests beyond the
/// context size retain everything.
ActivatedContext select_top(const ScoredContext& scored, std::size_t target_count);

struct ExtractResult {
  Mat o_c;  // one row per point in the retained voxels, width N_C
  std::vector<std::uint32_t> point_indices;  // into the historical cloud
};

/// Runs the per-voxel and neighborhood extractor branches on the retained
/// voxels, multiplies them element-wise and propagates the product to the
/// points inside the retained voxels. neighborhood_pool additionally mean-
/// pools each voxel with its 6-connected retained neighbors before the
/// second branch (off by default).
ExtractResult extract(const ActivatedContext& activated, const WeightBundle& w,
                      bool neighborhood_pool = false);

}  // namespace stvq::ca
