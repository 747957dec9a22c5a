// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <deque>

#include "stvq/geometry.hpp"
#include "stvq/types.hpp"

namespace stvq {

/// One remembered frame: points with their meta fields (per-point timestamps
/// are offsets within the frame), one inherited feature row per point, the
/// frame's pose (frame -> world) and its absolute capture time.
struct FrameRecord {
  int frame_id = 0;
  Pose pose;
  double time = 0.0;
  PointCloud points;
};

/// Sliding window over the last `capacity` frames. Updates are sequential
/// (strictly increasing frame ids); fetch is read-only and returns a fresh
/// snapshot, so readers between updates need no coordination.
class TfiBuffer {
 public:
  TfiBuffer(std::size_t capacity, int feature_dim);

  /// Appends the record, evicting the oldest frame beyond capacity. Throws
  /// Error when record.frame_id does not exceed the newest buffered id, or
  /// when the feature width disagrees with the buffer.
  void update(FrameRecord record);

  /// All buffered points re-projected into the current frame
  /// (inverse(current_pose) composed with each stored pose), timestamps
  /// re-based to seconds relative to current_time, inherited features
  /// untouched. Oldest frame first.
  PointCloud fetch(const Pose& current_pose, double current_time) const;

  std::size_t size() const { return frames_.size(); }
  std::size_t capacity() const { return capacity_; }
  int feature_dim() const { return feature_dim_; }
  const std::deque<FrameRecord>& frames() const { return frames_; }

 private:
  std::size_t capacity_;
  int feature_dim_;
  std::deque<FrameRecord> frames_;
};

}  // namespace stvq
