// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include <json.hpp>

#include "stvq/config.hpp"
#include "stvq/context_activator.hpp"
#include "stvq/svaq.hpp"
#include "stvq/tfi.hpp"
#include "stvq/weights.hpp"

namespace stvq {

struct PipelineOptions {
  svaq::AttentionMode attention_mode = svaq::AttentionMode::dense;
  ca::Mode ca_mode = ca::Mode::infer;
  /// Defaults to the config score threshold.
  std::optional<double> threshold;
  /// When set, keep this many top-scoring context voxels instead of
  /// thresholding.
  std::optional<std::size_t> target_count;
  bool neighborhood_pool = false;
};

struct StageTimings {
  double fetch_ms = 0;
  double voxelize_ms = 0;
  double query_ms = 0;
  double svaq_ms = 0;
  double ca_ms = 0;
  double update_ms = 0;
};

struct FrameReport {
  int frame_id = 0;
  std::size_t current_points = 0;
  std::size_t history_points = 0;
  std::vector<int> scales;
  std::vector<std::size_t> current_voxels;     // per scale
  std::vector<std::size_t> history_voxels;     // per scale
  std::vector<std::size_t> matched;            // per scale
  std::size_t context_voxels = 0;              // |V^n| at scale 1
  std::size_t retained_voxels = 0;             // m_prime
  std::size_t o_c_points = 0;
  StageTimings timings;

  nlohmann::json to_json() const;
};

struct FrameResult {
  Mat o_v;  // current_points x N_C
  Mat o_c;  // o_c_points x N_C
  std::vector<std::uint32_t> o_c_point_indices;  // into the fetched history cloud
  FrameReport report;
};

/// One step of the frame loop: fetch the buffered history into this frame,
/// voxelize both streams at every scale, split the history into matched
/// neighborhood and leftover context, run the attention and context paths,
/// then remember this frame's per-point output features. Per-point input
/// timestamps are offsets within the frame (usually 0); `time` is the
/// frame's absolute capture time. The buffer is untouched if any stage
/// throws.
FrameResult process_frame(TfiBuffer& buffer, const PointCloud& frame, const Pose& pose,
                          double time, const WeightBundle& weights, const VoxelConfig& cfg,
                          const PipelineOptions& opt = {});

}  // namespace stvq
