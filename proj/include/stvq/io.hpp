// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "stvq/geometry.hpp"
#include "stvq/tfi.hpp"
#include "stvq/types.hpp"
#include "stvq/weights.hpp"

namespace stvq::io {

// All binary payloads are little-endian 32-bit floats. Files that carry a
// payload start with a single-line JSON header terminated by '\n'; the
// payload follows immediately.

/// Point binary: consecutive (x, y, z, intensity) float quadruples. The file
/// length must be a multiple of 16 bytes; timestamps are left at 0 for the
/// caller to fill. Truncated files raise FormatError with the byte offset.
PointCloud read_point_bin(const std::filesystem::path& path);
void write_point_bin(const std::filesystem::path& path, const PointCloud& cloud);

/// Pose file: one pose per line, 12 whitespace-separated reals (row-major
/// 3x4). Rotations must be orthonormal within 1e-4 and are snapped to the
/// nearest rotation on read. Parse errors carry the line number.
std::vector<Pose> read_poses(const std::filesystem::path& path);
void write_poses(const std::filesystem::path& path, const std::vector<Pose>& poses);

/// Conjugates every pose by a sensor-to-reference calibration transform
/// (calib^-1 * pose * calib), turning reference-frame trajectories into
/// sensor-frame ones. Identity calibration is a no-op.
std::vector<Pose> apply_calibration(std::vector<Pose> poses, const Pose& calibration);

/// Feature dump: header {"dtype":"f32le","name":...,"rows":...,"width":...}
/// then rows*width floats, row-major.
void write_features(const std::filesystem::path& path, const Mat& rows,
                    const std::string& name);
struct FeatureDump {
  Mat values;
  std::string name;
};
FeatureDump read_features(const std::filesystem::path& path);

/// Weight bundle: header lists seed, dims and layer shapes in order; the
/// payload concatenates each linear layer (weights row-major, then biases)
/// and finally the norm layer (mean, var, gain, bias).
void save_weights(const std::filesystem::path& path, const WeightBundle& w);
WeightBundle load_weights(const std::filesystem::path& path);

/// Buffer checkpoint: header carries n, d and per-frame meta (frame_id,
/// time, pose as 12 doubles, point count); the payload holds one
/// rows x (5 + d) block per frame in buffer order, each row
/// (x, y, z, intensity, timestamp offset, features...).
void save_checkpoint(const std::filesystem::path& path, const TfiBuffer& buffer);
TfiBuffer load_checkpoint(const std::filesystem::path& path);

/// Axis-aligned box for scene synthesis.
struct BoxSpec {
  std::array<double, 3> center{0, 0, 0};
  std::array<double, 3> size{2, 2, 2};
  std::array<double, 3> velocity{0, 0, 0};  // m/s, moving boxes only
};

/// Deterministic synthetic scene. Explicit box lists win over the counts;
/// when a list is empty and its count is positive, placements are drawn from
/// the seed. Occluders are invisible volumes that shadow points behind them
/// (ray test from the sensor origin).
struct SceneSpec {
  std::uint64_t seed = 1;
  double ground_extent = 20.0;  // half-extent in meters
  std::size_t ground_points = 2000;
  std::size_t static_box_count = 0;
  std::size_t moving_box_count = 0;
  std::size_t occluder_count = 0;
  std::size_t points_per_object = 200;
  std::array<double, 3> ego_velocity{0, 0, 0};
  double frame_period = 0.1;  // seconds
  std::vector<BoxSpec> static_boxes;
  std::vector<BoxSpec> moving_boxes;
  std::vector<BoxSpec> occluders;

  nlohmann::json to_json() const;
  static SceneSpec from_json(const nlohmann::json& j);
  static SceneSpec load(const std::filesystem::path& path);
};

struct SynthFrame {
  PointCloud cloud;  // sensor frame, per-point timestamps 0
  Pose pose;         // frame -> world
  double time = 0.0;
};

/// Bit-reproducible for a fixed seed: object surfaces are sampled once in
/// local coordinates and advected rigidly, so static scenes repeat exactly
/// and moving boxes translate by velocity * period per frame.
std::vector<SynthFrame> synth_sequence(const SceneSpec& spec, std::size_t frames);

}  // namespace stvq::io
