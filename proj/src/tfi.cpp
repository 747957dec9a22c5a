// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#include "stvq/tfi.hpp"

#include <cstring>

namespace stvq {

TfiBuffer::TfiBuffer(std::size_t capacity, int feature_dim)
    : capacity_(capacity), feature_dim_(feature_dim) {
  if (feature_dim < 0) throw Error("TfiBuffer: feature_dim must be non-negative");
}

void TfiBuffer::update(FrameRecord record) {
  if (!frames_.empty() && record.frame_id <= frames_.back().frame_id) {
    throw Error("TfiBuffer: frame id " + std::to_string(record.frame_id) +
                " does not exceed newest buffered id " +
                std::to_string(frames_.back().frame_id));
  }
  if (record.points.has_inherited()) {
    if (record.points.inherited.cols != static_cast<std::size_t>(feature_dim_)) {
      throw DimensionError("TfiBuffer: inherited feature width does not match buffer");
    }
    if (record.points.inherited.rows != record.points.size()) {
      throw DimensionError("TfiBuffer: feature row count does not match point count");
    }
  } else if (feature_dim_ != 0 && record.points.size() != 0) {
    throw DimensionError("TfiBuffer: record lacks inherited features");
  }
  frames_.push_back(std::move(record));
  while (frames_.size() > capacity_) frames_.pop_front();
}

PointCloud TfiBuffer::fetch(const Pose& current_pose, double current_time) const {
  PointCloud out;
  const Pose to_current_base = inverse(current_pose);

  std::size_t total = 0;
  for (const auto& f : frames_) total += f.points.size();
  out.points.reserve(total);
  out.inherited = Mat(total, static_cast<std::size_t>(feature_dim_));

  std::size_t row = 0;
  for (const auto& f : frames_) {
    const Pose to_current = compose(to_current_base, f.pose);
    for (std::size_t p = 0; p < f.points.size(); ++p) {
      Point q = to_current.apply(f.points.points[p]);
      q.timestamp = f.time + f.points.points[p].timestamp - current_time;
      out.points.push_back(q);
      if (feature_dim_ != 0) {
        std::memcpy(out.inherited.row(row), f.points.inherited.row(p),
                    static_cast<std::size_t>(feature_dim_) * sizeof(double));
      }
      ++row;
    }
  }
  return out;
}

}  // namespace stvq
