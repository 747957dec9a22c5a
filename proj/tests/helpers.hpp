// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>

#include "stvq/config.hpp"
#include "stvq/geometry.hpp"
#include "stvq/rng.hpp"
#include "stvq/types.hpp"
#include "stvq/voxelizer.hpp"
#include "stvq/weights.hpp"

namespace stvq::test {

inline double max_abs_diff(const Mat& a, const Mat& b) {
  if (!a.same_shape(b)) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  }
  return m;
}

inline Pose random_pose(Rng& rng, double translation_extent = 5.0) {
  const std::array<double, 3> axis{rng.uniform(-1, 1), rng.uniform(-1, 1),
                                   rng.uniform(-1, 1)};
  const std::array<double, 3> t{rng.uniform(-translation_extent, translation_extent),
                                rng.uniform(-translation_extent, translation_extent),
                                rng.uniform(-translation_extent, translation_extent)};
  const double angle = rng.uniform(-3.0, 3.0);
  const double norm = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  if (norm < 1e-3) return Pose::translation_only(t[0], t[1], t[2]);
  return Pose::from_axis_angle(axis, angle, t);
}

inline PointCloud random_cloud(Rng& rng, std::size_t n, double extent = 3.0,
                               std::size_t feature_dim = 0) {
  PointCloud c;
  c.points.resize(n);
  for (auto& p : c.points) {
    p.x = rng.uniform(-extent, extent);
    p.y = rng.uniform(-extent, extent);
    p.z = rng.uniform(-extent, extent);
    p.intensity = rng.uniform01();
    p.timestamp = 0.0;
  }
  if (feature_dim != 0) {
    c.inherited = Mat(n, feature_dim);
    for (double& v : c.inherited.data) v = rng.uniform(-1.0, 1.0);
  }
  return c;
}

/// Voxelized current/history pair for forward-path tests: current points
/// carry raw meta only, history points carry inherited features and negative
/// timestamps.
struct ForwardInstance {
  VoxelConfig cfg;
  WeightBundle weights;
  std::vector<VoxelSet> current_sets;
  std::vector<VoxelSet> hist_sets;
};

inline ForwardInstance make_forward_instance(std::uint64_t seed, std::size_t current_points,
                                             std::size_t hist_points,
                                             std::vector<int> scales = {1, 2, 4}) {
  ForwardInstance inst;
  inst.cfg.scales = std::move(scales);
  inst.cfg.validate();
  inst.weights = WeightBundle::seeded(inst.cfg, seed ^ 0xabcdef);

  Rng rng(seed);
  PointCloud current = random_cloud(rng, current_points, 3.0, 0);
  PointCloud hist =
      random_cloud(rng, hist_points, 3.5, static_cast<std::size_t>(inst.cfg.feature_dim));
  for (auto& p : hist.points) p.timestamp = rng.uniform(-0.3, -0.05);

  for (int s : inst.cfg.scales) {
    inst.current_sets.push_back(voxelize(current, s, inst.cfg, FrameTag::current));
    inst.hist_sets.push_back(voxelize(hist, s, inst.cfg, FrameTag::historical));
  }
  return inst;
}

}  // namespace stvq::test
