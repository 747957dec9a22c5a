// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <span>

#include "stvq/types.hpp"

namespace stvq {

/// One LiDAR return. Timestamps are seconds relative to the owning frame
/// (0 for the current frame, negative for history after re-basing).
struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;
  double timestamp = 0.0;
};

/// Ordered point sequence. Every per-point output in the pipeline is
/// index-aligned with this order. `inherited` is either empty (0x0) or one
/// feature row per point, carried through transforms untouched.
struct PointCloud {
  std::vector<Point> points;
  Mat inherited;
  int frame_id = 0;

  std::size_t size() const { return points.size(); }
  bool has_inherited() const { return inherited.cols != 0; }
};

/// Rigid transform: rotation (row-major 3x3, orthonormal, det +1) plus
/// translation in meters. Validated on construction; immutable after.
class Pose {
 public:
  Pose();  // identity

  /// Throws InvalidPoseError unless rotation is orthonormal within 1e-6 with
  /// determinant +1 within 1e-6.
  Pose(const std::array<double, 9>& rotation, const std::array<double, 3>& translation);

  static Pose identity() { return Pose(); }

  /// Row-major 3x4 line layout: r00 r01 r02 tx r10 ... tz.
  static Pose from_row_major_3x4(std::span<const double, 12> m);

  static Pose translation_only(double x, double y, double z);

  /// Rotation about a (normalized internally) axis by `angle` radians.
  static Pose from_axis_angle(const std::array<double, 3>& axis, double angle,
                              const std::array<double, 3>& translation = {0.0, 0.0, 0.0});

  const std::array<double, 9>& rotation() const { return r_; }
  const std::array<double, 3>& translation() const { return t_; }

  std::array<double, 3> apply(const std::array<double, 3>& p) const;
  Point apply(const Point& p) const;

  std::array<double, 12> to_row_major_3x4() const;

 private:
  std::array<double, 9> r_;
  std::array<double, 3> t_;
};

/// compose(a, b) applies b first, then a.
Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);

/// Rigid transform of every point; intensity, timestamp and inherited
/// features pass through, order preserved.
PointCloud transform(const PointCloud& cloud, const Pose& pose);

/// Subtracts current_time from every timestamp.
PointCloud rebase_timestamps(PointCloud cloud, double current_time);

/// Closest rotation matrix to an approximately-orthonormal input (polar
/// iteration). Used when ingesting pose files with limited precision.
std::array<double, 9> nearest_rotation(const std::array<double, 9>& m);

}  // namespace stvq
