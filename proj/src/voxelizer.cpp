// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#include "stvq/voxelizer.hpp"

#include <cmath>

#include "stvq/hash_index.hpp"
#include "stvq/kernels.hpp"

namespace stvq {

VoxelCoord quantize(const Point& p, int scale, const std::array<double, 3>& base) {
  for (double b : base) {
    if (!(b > 0.0)) throw Error("quantize: base size components must be positive");
  }
  if (scale < 1) throw Error("quantize: scale must be >= 1");
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
    throw InvalidPointError("quantize: non-finite point coordinate");
  }
  const double fi = std::floor(p.x / base[0]);
  const double fj = std::floor(p.y / base[1]);
  const double fk = std::floor(p.z / base[2]);
  constexpr double lim = 2147483000.0;
  if (std::abs(fi) > lim || std::abs(fj) > lim || std::abs(fk) > lim) {
    throw InvalidPointError("quantize: cell index overflows 32 bits");
  }
  VoxelCoord c{static_cast<std::int32_t>(fi), static_cast<std::int32_t>(fj),
               static_cast<std::int32_t>(fk)};
  if (scale > 1) {
    c.i = floor_div(c.i, scale);
    c.j = floor_div(c.j, scale);
    c.k = floor_div(c.k, scale);
  }
  return c;
}

VoxelSet voxelize(const PointCloud& cloud, int scale, const VoxelConfig& cfg, FrameTag tag) {
  if (cloud.has_inherited()) {
    if (cloud.inherited.rows != cloud.size()) {
      throw DimensionError("voxelize: inherited feature rows do not match point count");
    }
    if (cloud.inherited.cols != static_cast<std::size_t>(cfg.feature_dim)) {
      throw DimensionError("voxelize: inherited feature width does not match config");
    }
  }
  const std::size_t d = cloud.has_inherited() ? cloud.inherited.cols : 0;
  const std::size_t width = 5 + d;
  const std::size_t n = cloud.size();

  VoxelSet set;
  set.scale = scale;
  set.tag = tag;

  CoordMap slots(n);
  std::vector<std::uint32_t> point_voxel(n);
  std::vector<std::uint32_t> counts;

  // First pass: group points by cell in first-occurrence order, summing rows.
  std::vector<double> sums;
  for (std::size_t p = 0; p < n; ++p) {
    const VoxelCoord c = quantize(cloud.points[p], scale, cfg.base_size);
    const std::uint32_t next = static_cast<std::uint32_t>(set.coords.size());
    std::uint32_t& slot = slots.get_or_insert(pack_coord(c), next);
    if (slot == next && counts.size() == next) {
      set.coords.push_back(c);
      counts.push_back(0);
      sums.resize(sums.size() + width, 0.0);
    }
    point_voxel[p] = slot;
    double* acc = sums.data() + static_cast<std::size_t>(slot) * width;
    const Point& pt = cloud.points[p];
    acc[0] += pt.x;
    acc[1] += pt.y;
    acc[2] += pt.z;
    acc[3] += pt.intensity;
    acc[4] += pt.timestamp;
    if (d != 0) {
      kernels::active().axpy(1.0, cloud.inherited.row(p), acc + 5, d);
    }
    ++counts[slot];
  }

  const std::size_t voxel_count = set.coords.size();
  set.features = Mat(voxel_count, width);
  set.features.data = std::move(sums);
  set.features.rows = voxel_count;
  set.features.cols = width;
  for (std::size_t v = 0; v < voxel_count; ++v) {
    kernels::active().scale(1.0 / static_cast<double>(counts[v]), set.features.row(v), width);
  }

  // Second pass: CSR membership, preserving input order inside each voxel.
  set.point_offsets.assign(voxel_count + 1, 0);
  for (std::size_t p = 0; p < n; ++p) ++set.point_offsets[point_voxel[p] + 1];
  for (std::size_t v = 0; v < voxel_count; ++v) {
    set.point_offsets[v + 1] += set.point_offsets[v];
  }
  set.point_indices.resize(n);
  std::vector<std::uint32_t> cursor(set.point_offsets.begin(), set.point_offsets.end() - 1);
  for (std::size_t p = 0; p < n; ++p) {
    set.point_indices[cursor[point_voxel[p]]++] = static_cast<std::uint32_t>(p);
  }
  return set;
}

const std::vector<VoxelCoord>& coords_of(const VoxelSet& set) { return set.coords; }

Mat propagate_to_points(const VoxelSet& set, const Mat& voxel_rows) {
  if (voxel_rows.rows != set.size()) {
    throw DimensionError("propagate_to_points: row count does not match voxel count");
  }
  Mat out(set.point_indices.size(), voxel_rows.cols);
  for (std::size_t v = 0; v < set.size(); ++v) {
    const double* src = voxel_rows.row(v);
    for (std::uint32_t p : set.points_of(v)) {
      std::copy(src, src + voxel_rows.cols, out.row(p));
    }
  }
  return out;
}

VoxelSet embed(const VoxelSet& set, const LinearLayer& layer) {
  VoxelSet out = set;
  out.features = linear_apply(set.features, layer);
  return out;
}

}  // namespace stvq
