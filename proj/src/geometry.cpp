// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#include "stvq/geometry.hpp"

#include <cmath>

namespace stvq {

namespace {

using Mat3 = std::array<double, 9>;

Mat3 mat3_mul(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a[i * 3 + k] * b[k * 3 + j];
      c[i * 3 + j] = s;
    }
  return c;
}

Mat3 mat3_transpose(const Mat3& a) {
  return {a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]};
}

double mat3_det(const Mat3& a) {
  return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
         a[2] * (a[3] * a[7] - a[4] * a[6]);
}

Mat3 mat3_inverse(const Mat3& a) {
  const double det = mat3_det(a);
  if (std::abs(det) < 1e-300) throw InvalidPoseError("singular 3x3 matrix");
  const double inv = 1.0 / det;
  Mat3 c;
  c[0] = (a[4] * a[8] - a[5] * a[7]) * inv;
  c[1] = (a[2] * a[7] - a[1] * a[8]) * inv;
  c[2] = (a[1] * a[5] - a[2] * a[4]) * inv;
  c[3] = (a[5] * a[6] - a[3] * a[8]) * inv;
  c[4] = (a[0] * a[8] - a[2] * a[6]) * inv;
  c[5] = (a[2] * a[3] - a[0] * a[5]) * inv;
  c[6] = (a[3] * a[7] - a[4] * a[6]) * inv;
  c[7] = (a[1] * a[6] - a[0] * a[7]) * inv;
  c[8] = (a[0] * a[4] - a[1] * a[3]) * inv;
  return c;
}

double orthonormality_error(const Mat3& r) {
  const Mat3 rrt = mat3_mul(r, mat3_transpose(r));
  double err = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double target = i == j ? 1.0 : 0.0;
      err = std::max(err, std::abs(rrt[i * 3 + j] - target));
    }
  return err;
}

void validate_rotation(const Mat3& r, double tol) {
  for (double v : r) {
    if (!std::isfinite(v)) throw InvalidPoseError("non-finite rotation entry");
  }
  if (orthonormality_error(r) > tol) {
    throw InvalidPoseError("rotation is not orthonormal within tolerance");
  }
  if (std::abs(mat3_det(r) - 1.0) > tol) {
    throw InvalidPoseError("rotation determinant is not +1 within tolerance");
  }
}

}  // namespace

Pose::Pose() : r_{1, 0, 0, 0, 1, 0, 0, 0, 1}, t_{0, 0, 0} {}

Pose::Pose(const std::array<double, 9>& rotation, const std::array<double, 3>& translation)
    : r_(rotation), t_(translation) {
  validate_rotation(r_, 1e-6);
  for (double v : t_) {
    if (!std::isfinite(v)) throw InvalidPoseError("non-finite translation entry");
  }
}

Pose Pose::from_row_major_3x4(std::span<const double, 12> m) {
  Mat3 r{m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]};
  return Pose(r, {m[3], m[7], m[11]});
}

Pose Pose::translation_only(double x, double y, double z) {
  return Pose({1, 0, 0, 0, 1, 0, 0, 0, 1}, {x, y, z});
}

Pose Pose::from_axis_angle(const std::array<double, 3>& axis, double angle,
                           const std::array<double, 3>& translation) {
  const double norm = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  if (norm < 1e-12) throw InvalidPoseError("zero-length rotation axis");
  const double ux = axis[0] / norm, uy = axis[1] / norm, uz = axis[2] / norm;
  const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
  const Mat3 r{c + ux * ux * t,      ux * uy * t - uz * s, ux * uz * t + uy * s,
               uy * ux * t + uz * s, c + uy * uy * t,      uy * uz * t - ux * s,
               uz * ux * t - uy * s, uz * uy * t + ux * s, c + uz * uz * t};
  return Pose(r, translation);
}

std::array<double, 3> Pose::apply(const std::array<double, 3>& p) const {
  return {r_[0] * p[0] + r_[1] * p[1] + r_[2] * p[2] + t_[0],
          r_[3] * p[0] + r_[4] * p[1] + r_[5] * p[2] + t_[1],
          r_[6] * p[0] + r_[7] * p[1] + r_[8] * p[2] + t_[2]};
}

Point Pose::apply(const Point& p) const {
  const auto q = apply(std::array<double, 3>{p.x, p.y, p.z});
  Point out = p;
  out.x = q[0];
  out.y = q[1];
  out.z = q[2];
  return out;
}

std::array<double, 12> Pose::to_row_major_3x4() const {
  return {r_[0], r_[1], r_[2], t_[0], r_[3], r_[4], r_[5],
          t_[1], r_[6], r_[7], r_[8], t_[2]};
}

Pose compose(const Pose& a, const Pose& b) {
  const Mat3 r = mat3_mul(a.rotation(), b.rotation());
  const auto t = a.apply(b.translation());
  return Pose(r, t);
}

Pose inverse(const Pose& p) {
  const Mat3 rt = mat3_transpose(p.rotation());
  const auto& t = p.translation();
  return Pose(rt, {-(rt[0] * t[0] + rt[1] * t[1] + rt[2] * t[2]),
                   -(rt[3] * t[0] + rt[4] * t[1] + rt[5] * t[2]),
                   -(rt[6] * t[0] + rt[7] * t[1] + rt[8] * t[2])});
}

PointCloud transform(const PointCloud& cloud, const Pose& pose) {
  PointCloud out;
  out.frame_id = cloud.frame_id;
  out.inherited = cloud.inherited;
  out.points.reserve(cloud.points.size());
  for (const Point& p : cloud.points) out.points.push_back(pose.apply(p));
  return out;
}

PointCloud rebase_timestamps(PointCloud cloud, double current_time) {
  for (Point& p : cloud.points) p.timestamp -= current_time;
  return cloud;
}

std::array<double, 9> nearest_rotation(const std::array<double, 9>& m) {
  // Higham's polar iteration: X <- (X + X^-T) / 2 converges to the closest
  // orthogonal factor; det > 0 inputs land on a proper rotation.
  Mat3 x = m;
  for (int iter = 0; iter < 32; ++iter) {
    const Mat3 inv_t = mat3_transpose(mat3_inverse(x));
    Mat3 next;
    for (int i = 0; i < 9; ++i) next[i] = 0.5 * (x[i] + inv_t[i]);
    double delta = 0.0;
    for (int i = 0; i < 9; ++i) delta = std::max(delta, std::abs(next[i] - x[i]));
    x = next;
    if (delta < 1e-15) break;
  }
  return x;
}

}  // namespace stvq
