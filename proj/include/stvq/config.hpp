// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "stvq/types.hpp"

namespace stvq {

/// Pipeline-wide dimensions and thresholds. Defaults reflect the reference
/// operating point: 0.2 m voxels, scales 1/2/4, 64-wide features, two
/// history frames, score threshold 0.1.
struct VoxelConfig {
  std::array<double, 3> base_size{0.2, 0.2, 0.2};  // (w, l, h) meters
  std::vector<int> scales{1, 2, 4};                // strictly increasing, first = 1
  int feature_dim = 64;                            // d, inherited feature width
  int key_dim = 64;                                // d_k, attention key width
  int channel_dim = 64;                            // N_C, output channel width
  int history_frames = 2;                          // n
  double score_threshold = 0.1;                    // S_th

  /// Throws Error on violated invariants.
  void validate() const;

  nlohmann::json to_json() const;
  static VoxelConfig from_json(const nlohmann::json& j);
  static VoxelConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

}  // namespace stvq
