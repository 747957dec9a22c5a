// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>

#include "stvq/config.hpp"
#include "stvq/geometry.hpp"
#include "stvq/types.hpp"
#include "stvq/weights.hpp"

namespace stvq {

/// Integer cell index at some scale. The owning VoxelSet carries the scale;
/// (i, j, k, scale) together form the unique lookup key.
struct VoxelCoord {
  std::int32_t i = 0;
  std::int32_t j = 0;
  std::int32_t k = 0;

  bool operator==(const VoxelCoord&) const = default;
};

enum class FrameTag { current, historical };

/// Deduplicated voxels in first-occurrence order of their coordinate in the
/// source cloud. Features are one row per voxel; point membership is stored
/// CSR-style with indices into the source cloud.
struct VoxelSet {
  int scale = 1;
  FrameTag tag = FrameTag::current;
  std::vector<VoxelCoord> coords;
  Mat features;
  std::vector<std::uint32_t> point_offsets;  // size() + 1 entries
  std::vector<std::uint32_t> point_indices;

  std::size_t size() const { return coords.size(); }
  std::size_t feature_width() const { return features.cols; }

  std::span<const std::uint32_t> points_of(std::size_t v) const {
    return {point_indices.data() + point_offsets[v],
            point_indices.data() + point_offsets[v + 1]};
  }
};

/// Signed floor division (toward -inf) for s > 0.
inline std::int32_t floor_div(std::int32_t a, std::int32_t s) {
  const std::int32_t q = a / s;
  const std::int32_t r = a % s;
  return (r != 0 && r < 0) ? q - 1 : q;
}

/// Cell index of a point: floor(x / (s*w)) per axis, floor toward -inf.
/// Coarse scales are derived from the scale-1 cell index by integer floor
/// division, which keeps cross-scale projection exact even when x/(s*w)
/// lands on a cell boundary in floating point.
/// Throws InvalidPointError on non-finite coordinates.
VoxelCoord quantize(const Point& p, int scale, const std::array<double, 3>& base);

/// One voxel per distinct cell; features are the arithmetic mean of the
/// per-point rows (x, y, z, intensity, timestamp, then inherited features
/// when the cloud carries them). Empty cloud yields an empty set.
VoxelSet voxelize(const PointCloud& cloud, int scale, const VoxelConfig& cfg,
                  FrameTag tag = FrameTag::current);

const std::vector<VoxelCoord>& coords_of(const VoxelSet& set);

/// Assigns every source point the row of the voxel containing it. voxel_rows
/// must have set.size() rows; the output has one row per source point,
/// index-aligned with the source cloud.
Mat propagate_to_points(const VoxelSet& set, const Mat& voxel_rows);

/// Optional learned per-voxel embedding: replaces features with
/// layer(features).
VoxelSet embed(const VoxelSet& set, const LinearLayer& layer);

}  // namespace stvq
