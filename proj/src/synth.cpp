// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>

#include "stvq/io.hpp"
#include "stvq/rng.hpp"

namespace stvq::io {

namespace {

nlohmann::json box_to_json(const BoxSpec& b) {
  return {{"center", b.center}, {"size", b.size}, {"velocity", b.velocity}};
}

BoxSpec box_from_json(const nlohmann::json& j) {
  BoxSpec b;
  if (j.contains("center")) b.center = j.at("center").get<std::array<double, 3>>();
  if (j.contains("size")) b.size = j.at("size").get<std::array<double, 3>>();
  if (j.contains("velocity")) b.velocity = j.at("velocity").get<std::array<double, 3>>();
  return b;
}

std::vector<BoxSpec> random_boxes(Rng& rng, std::size_t count, double extent, bool moving) {
  std::vector<BoxSpec> boxes;
  boxes.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    BoxSpec b;
    b.size = {rng.uniform(1.0, 4.0), rng.uniform(1.0, 4.0), rng.uniform(1.0, 3.0)};
    b.center = {rng.uniform(-extent, extent), rng.uniform(-extent, extent), b.size[2] / 2.0};
    if (moving) {
      b.velocity = {rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0), 0.0};
    }
    boxes.push_back(b);
  }
  return boxes;
}

// Uniform sample on the box surface, in box-local coordinates.
std::array<double, 3> sample_box_surface(Rng& rng, const std::array<double, 3>& size) {
  const int face = static_cast<int>(rng.uniform_int(0, 5));
  const double u = rng.uniform01() - 0.5;
  const double v = rng.uniform01() - 0.5;
  const int axis = face / 2;
  const double side = (face % 2 == 0) ? 0.5 : -0.5;
  std::array<double, 3> p{};
  p[axis] = side * size[axis];
  p[(axis + 1) % 3] = u * size[(axis + 1) % 3];
  p[(axis + 2) % 3] = v * size[(axis + 2) % 3];
  return p;
}

// Slab test: does the segment origin -> target cut the box strictly before
// reaching the target?
bool segment_blocked(const std::array<double, 3>& origin, const std::array<double, 3>& target,
                     const BoxSpec& box, const std::array<double, 3>& box_center) {
  double t_lo = 0.0;
  double t_hi = 1.0 - 1e-9;
  for (int a = 0; a < 3; ++a) {
    const double lo = box_center[a] - box.size[a] / 2.0;
    const double hi = box_center[a] + box.size[a] / 2.0;
    const double d = target[a] - origin[a];
    if (std::abs(d) < 1e-12) {
      if (origin[a] < lo || origin[a] > hi) return false;
      continue;
    }
    double t0 = (lo - origin[a]) / d;
    double t1 = (hi - origin[a]) / d;
    if (t0 > t1) std::swap(t0, t1);
    t_lo = std::max(t_lo, t0);
    t_hi = std::min(t_hi, t1);
    if (t_lo > t_hi) return false;
  }
  return true;
}

struct WorldObject {
  std::vector<std::array<double, 3>> local_points;  // sampled once
  std::vector<double> intensities;
  std::array<double, 3> base_center{};
  std::array<double, 3> velocity{};
};

}  // namespace

nlohmann::json SceneSpec::to_json() const {
  nlohmann::json j{{"seed", seed},
                   {"ground_extent", ground_extent},
                   {"ground_points", ground_points},
                   {"static_box_count", static_box_count},
                   {"moving_box_count", moving_box_count},
                   {"occluder_count", occluder_count},
                   {"points_per_object", points_per_object},
                   {"ego_velocity", ego_velocity},
                   {"frame_period", frame_period}};
  auto dump_list = [](const std::vector<BoxSpec>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : v) arr.push_back(box_to_json(b));
    return arr;
  };
  j["static_boxes"] = dump_list(static_boxes);
  j["moving_boxes"] = dump_list(moving_boxes);
  j["occluders"] = dump_list(occluders);
  return j;
}

SceneSpec SceneSpec::from_json(const nlohmann::json& j) {
  SceneSpec s;
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("ground_extent")) s.ground_extent = j.at("ground_extent").get<double>();
  if (j.contains("ground_points")) s.ground_points = j.at("ground_points").get<std::size_t>();
  if (j.contains("static_box_count")) s.static_box_count = j.at("static_box_count").get<std::size_t>();
  if (j.contains("moving_box_count")) s.moving_box_count = j.at("moving_box_count").get<std::size_t>();
  if (j.contains("occluder_count")) s.occluder_count = j.at("occluder_count").get<std::size_t>();
  if (j.contains("points_per_object")) s.points_per_object = j.at("points_per_object").get<std::size_t>();
  if (j.contains("ego_velocity")) s.ego_velocity = j.at("ego_velocity").get<std::array<double, 3>>();
  if (j.contains("frame_period")) s.frame_period = j.at("frame_period").get<double>();
  auto read_list = [](const nlohmann::json& arr) {
    std::vector<BoxSpec> v;
    for (const auto& b : arr) v.push_back(box_from_json(b));
    return v;
  };
  if (j.contains("static_boxes")) s.static_boxes = read_list(j.at("static_boxes"));
  if (j.contains("moving_boxes")) s.moving_boxes = read_list(j.at("moving_boxes"));
  if (j.contains("occluders")) s.occluders = read_list(j.at("occluders"));
  if (s.frame_period <= 0.0) throw Error("SceneSpec: frame_period must be positive");
  return s;
}

SceneSpec SceneSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open scene spec: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("invalid scene spec JSON in " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

std::vector<SynthFrame> synth_sequence(const SceneSpec& spec, std::size_t frames) {
  if (frames < 1) throw Error("synth_sequence: frames must be >= 1");
  if (spec.frame_period <= 0.0) throw Error("synth_sequence: frame_period must be positive");
  Rng rng(spec.seed);

  std::vector<BoxSpec> statics = spec.static_boxes;
  if (statics.empty() && spec.static_box_count > 0) {
    statics = random_boxes(rng, spec.static_box_count, spec.ground_extent, false);
  }
  std::vector<BoxSpec> movers = spec.moving_boxes;
  if (movers.empty() && spec.moving_box_count > 0) {
    movers = random_boxes(rng, spec.moving_box_count, spec.ground_extent, true);
  }
  std::vector<BoxSpec> occluders = spec.occluders;
  if (occluders.empty() && spec.occluder_count > 0) {
    occluders = random_boxes(rng, spec.occluder_count, spec.ground_extent, false);
  }

  // Sample every surface once; frames only advect the samples rigidly.
  std::vector<WorldObject> objects;
  {
    WorldObject ground;
    ground.base_center = {0, 0, 0};
    for (std::size_t i = 0; i < spec.ground_points; ++i) {
      ground.local_points.push_back({rng.uniform(-spec.ground_extent, spec.ground_extent),
                                     rng.uniform(-spec.ground_extent, spec.ground_extent), 0.0});
      ground.intensities.push_back(rng.uniform01());
    }
    objects.push_back(std::move(ground));
  }
  auto add_box_object = [&](const BoxSpec& b) {
    WorldObject obj;
    obj.base_center = b.center;
    obj.velocity = b.velocity;
    for (std::size_t i = 0; i < spec.points_per_object; ++i) {
      obj.local_points.push_back(sample_box_surface(rng, b.size));
      obj.intensities.push_back(rng.uniform01());
    }
    objects.push_back(std::move(obj));
  };
  for (const auto& b : statics) add_box_object(b);
  for (const auto& b : movers) add_box_object(b);

  std::vector<SynthFrame> out;
  out.reserve(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    const double time = static_cast<double>(f) * spec.frame_period;
    const std::array<double, 3> ego{spec.ego_velocity[0] * time, spec.ego_velocity[1] * time,
                                    spec.ego_velocity[2] * time};
    SynthFrame frame;
    frame.time = time;
    frame.pose = Pose::translation_only(ego[0], ego[1], ego[2]);

    for (const auto& obj : objects) {
      const std::array<double, 3> center{obj.base_center[0] + obj.velocity[0] * time,
                                         obj.base_center[1] + obj.velocity[1] * time,
                                         obj.base_center[2] + obj.velocity[2] * time};
      for (std::size_t i = 0; i < obj.local_points.size(); ++i) {
        const std::array<double, 3> world{center[0] + obj.local_points[i][0],
                                          center[1] + obj.local_points[i][1],
                                          center[2] + obj.local_points[i][2]};
        bool shadowed = false;
        for (const auto& occ : occluders) {
          if (segment_blocked(ego, world, occ, occ.center)) {
            shadowed = true;
            break;
          }
        }
        if (shadowed) continue;
        Point p;
        p.x = world[0] - ego[0];
        p.y = world[1] - ego[1];
        p.z = world[2] - ego[2];
        p.intensity = obj.intensities[i];
        p.timestamp = 0.0;
        frame.cloud.points.push_back(p);
      }
    }
    frame.cloud.frame_id = static_cast<int>(f);
    out.push_back(std::move(frame));
  }
  return out;
}

}  // namespace stvq::io
