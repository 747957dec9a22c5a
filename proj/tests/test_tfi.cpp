// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstring>

#include "helpers.hpp"
#include "stvq/tfi.hpp"

using namespace stvq;

TEST_SUITE_BEGIN("tfi");

namespace {

FrameRecord make_record(int frame_id, const Pose& pose, double time, std::uint64_t seed,
                        std::size_t n = 30, int d = 4) {
  Rng rng(seed);
  FrameRecord rec;
  rec.frame_id = frame_id;
  rec.pose = pose;
  rec.time = time;
  rec.points = test::random_cloud(rng, n, 10.0, static_cast<std::size_t>(d));
  return rec;
}

}  // namespace

TEST_CASE("window semantics") {
  TfiBuffer buf(2, 4);
  CHECK(buf.size() == 0);
  buf.update(make_record(0, Pose::identity(), 0.0, 1));
  CHECK(buf.size() == 1);
  buf.update(make_record(1, Pose::identity(), 0.1, 2));
  CHECK(buf.size() == 2);
  buf.update(make_record(2, Pose::identity(), 0.2, 3));
  CHECK(buf.size() == 2);
  CHECK(buf.frames().front().frame_id == 1);
  CHECK(buf.frames().back().frame_id == 2);

  CHECK_THROWS_AS(buf.update(make_record(2, Pose::identity(), 0.3, 4)), Error);
  CHECK_THROWS_AS(buf.update(make_record(-5, Pose::identity(), 0.3, 4)), Error);
}

TEST_CASE("window holds min(k, n) frames after k updates") {
  for (int k = 1; k <= 5; ++k) {
    TfiBuffer buf(2, 4);
    for (int t = 0; t < k; ++t) {
      buf.update(make_record(t, Pose::identity(), 0.1 * t, static_cast<std::uint64_t>(t)));
    }
    CHECK(buf.size() == static_cast<std::size_t>(std::min(k, 2)));
  }
}

TEST_CASE("fetch from an empty buffer is an empty history") {
  const TfiBuffer buf(2, 8);
  const PointCloud out = buf.fetch(Pose::identity(), 1.0);
  CHECK(out.size() == 0);
  CHECK(out.inherited.cols == 8);  // width survives for downstream shaping
}

TEST_CASE("identity fetch only re-bases timestamps") {
  TfiBuffer buf(2, 4);
  buf.update(make_record(0, Pose::identity(), 1.0, 5));
  const PointCloud out = buf.fetch(Pose::identity(), 1.5);
  const auto& stored = buf.frames().front().points;
  REQUIRE(out.size() == stored.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out.points[i].x == stored.points[i].x);
    CHECK(out.points[i].y == stored.points[i].y);
    CHECK(out.points[i].z == stored.points[i].z);
    CHECK(out.points[i].intensity == stored.points[i].intensity);
    CHECK(out.points[i].timestamp == doctest::Approx(1.0 - 1.5));
  }
}

TEST_CASE("re-fetching with the stored pose reproduces the stored coordinates") {
  Rng rng(6);
  const Pose pose = test::random_pose(rng);
  TfiBuffer buf(2, 4);
  buf.update(make_record(0, pose, 0.0, 7));
  const PointCloud out = buf.fetch(pose, 0.1);
  const auto& stored = buf.frames().front().points;
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(std::abs(out.points[i].x - stored.points[i].x) < 1e-6);
    CHECK(std::abs(out.points[i].y - stored.points[i].y) < 1e-6);
    CHECK(std::abs(out.points[i].z - stored.points[i].z) < 1e-6);
  }
}

TEST_CASE("static world points land on their direct projection") {
  Rng rng(8);
  for (int iter = 0; iter < 10; ++iter) {
    const Pose pose_prev = test::random_pose(rng);
    const Pose pose_cur = test::random_pose(rng);

    // World points, observed from the previous frame.
    std::vector<std::array<double, 3>> world(25);
    for (auto& p : world) {
      p = {rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-2, 2)};
    }
    FrameRecord rec;
    rec.frame_id = 0;
    rec.pose = pose_prev;
    rec.time = 0.0;
    const Pose world_to_prev = inverse(pose_prev);
    for (const auto& p : world) {
      Point q;
      const auto local = world_to_prev.apply(p);
      q.x = local[0];
      q.y = local[1];
      q.z = local[2];
      rec.points.points.push_back(q);
    }
    rec.points.inherited = Mat(world.size(), 4);

    TfiBuffer buf(2, 4);
    buf.update(std::move(rec));
    const PointCloud fetched = buf.fetch(pose_cur, 0.1);

    const Pose world_to_cur = inverse(pose_cur);
    for (std::size_t i = 0; i < world.size(); ++i) {
      const auto direct = world_to_cur.apply(world[i]);
      CHECK(std::abs(fetched.points[i].x - direct[0]) < 1e-6);
      CHECK(std::abs(fetched.points[i].y - direct[1]) < 1e-6);
      CHECK(std::abs(fetched.points[i].z - direct[2]) < 1e-6);
    }
  }
}

TEST_CASE("fetched timestamps are strictly negative for strictly older frames") {
  TfiBuffer buf(3, 4);
  buf.update(make_record(0, Pose::identity(), 0.0, 9));
  buf.update(make_record(1, Pose::identity(), 0.1, 10));
  buf.update(make_record(2, Pose::identity(), 0.2, 11));
  const PointCloud out = buf.fetch(Pose::identity(), 0.3);
  for (const auto& p : out.points) CHECK(p.timestamp < 0.0);
}

TEST_CASE("inherited features pass through fetch byte-identical") {
  Rng rng(12);
  const Pose pose = test::random_pose(rng);
  FrameRecord rec = make_record(0, pose, 0.0, 13, 40, 16);
  const Mat original = rec.points.inherited;
  TfiBuffer buf(2, 16);
  buf.update(std::move(rec));
  const PointCloud out = buf.fetch(test::random_pose(rng), 0.2);
  REQUIRE(out.inherited.rows == original.rows);
  CHECK(std::memcmp(out.inherited.data.data(), original.data.data(),
                    original.data.size() * sizeof(double)) == 0);
}

TEST_CASE("feature width mismatches are rejected") {
  TfiBuffer buf(2, 8);
  CHECK_THROWS_AS(buf.update(make_record(0, Pose::identity(), 0.0, 14, 10, 4)),
                  DimensionError);
}

TEST_SUITE_END();
