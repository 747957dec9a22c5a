// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <set>

#include "helpers.hpp"
#include "stvq/context_activator.hpp"
#include "stvq/hash_index.hpp"
#include "stvq/oracle.hpp"

using namespace stvq;
using test::max_abs_diff;

TEST_SUITE_BEGIN("context_activator");

namespace {

struct CaInstance {
  VoxelConfig cfg;
  WeightBundle weights;
  VoxelSet current;
  VoxelSet context;
};

CaInstance make_ca_instance(std::uint64_t seed, std::size_t current_points,
                            std::size_t hist_points) {
  CaInstance inst;
  inst.weights = WeightBundle::seeded(inst.cfg, seed ^ 0x5eed);
  Rng rng(seed);
  const PointCloud cur_cloud = test::random_cloud(rng, current_points, 3.0);
  PointCloud hist_cloud = test::random_cloud(rng, hist_points, 4.0, 64);
  inst.current = voxelize(cur_cloud, 1, inst.cfg);
  const VoxelSet hist = voxelize(hist_cloud, 1, inst.cfg, FrameTag::historical);
  inst.context = unquery(hist, inst.current);
  return inst;
}

}  // namespace

TEST_CASE("empty context scores to nothing") {
  VoxelConfig cfg;
  const WeightBundle w = WeightBundle::seeded(cfg, 1);
  VoxelSet empty;
  empty.scale = 1;
  empty.features = Mat(0, 69);
  Rng rng(2);
  const VoxelSet current = voxelize(test::random_cloud(rng, 20, 1.0), 1, cfg);
  const auto scored = ca::score(empty, current, w);
  CHECK(scored.scores.empty());
  const auto activated = ca::activate(scored, 0.1, ca::Mode::infer);
  CHECK(activated.retained_count() == 0);
  const auto extracted = ca::extract(activated, w);
  CHECK(extracted.o_c.rows == 0);
  CHECK(extracted.o_c.cols == 64);
}

TEST_CASE("scores live strictly inside (0, 1)") {
  auto inst = make_ca_instance(3, 100, 400);
  const auto scored = ca::score(inst.context, inst.current, inst.weights);
  REQUIRE(scored.scores.size() == inst.context.size());
  for (double s : scored.scores) {
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }
}

TEST_CASE("score requires scale 1") {
  auto inst = make_ca_instance(4, 30, 90);
  VoxelSet wrong = inst.context;
  wrong.scale = 2;
  CHECK_THROWS_AS(ca::score(wrong, inst.current, inst.weights), ScaleMismatchError);
}

TEST_CASE("activate edges and score scaling") {
  auto inst = make_ca_instance(5, 80, 300);
  const auto scored = ca::score(inst.context, inst.current, inst.weights);

  SUBCASE("threshold 0 keeps everything in infer mode") {
    const auto act = ca::activate(scored, 0.0, ca::Mode::infer);
    CHECK(act.retained_count() == scored.voxels.size());
  }
  SUBCASE("threshold 1 keeps nothing") {
    const auto act = ca::activate(scored, 1.0, ca::Mode::infer);
    CHECK(act.retained_count() == 0);
  }
  SUBCASE("train mode ignores the threshold") {
    const auto act = ca::activate(scored, 0.99, ca::Mode::train);
    CHECK(act.retained_count() == scored.voxels.size());
  }
  SUBCASE("retained features equal original times score") {
    const auto act = ca::activate(scored, 0.0, ca::Mode::infer);
    for (std::size_t r = 0; r < act.retained_count(); ++r) {
      const std::uint32_t src = act.source_rows[r];
      for (std::size_t c = 0; c < inst.context.feature_width(); ++c) {
        const double expect = inst.context.features.at(src, c) * scored.scores[src];
        CHECK(std::abs(act.voxels.features.at(r, c) - expect) < 1e-9);
      }
    }
  }
}

TEST_CASE("raising the threshold shrinks the retained set monotonically") {
  auto inst = make_ca_instance(6, 100, 500);
  const auto scored = ca::score(inst.context, inst.current, inst.weights);
  std::set<std::uint32_t> previous;
  bool first = true;
  for (int step = 0; step <= 20; ++step) {
    const double th = static_cast<double>(step) / 20.0;
    const auto act = ca::activate(scored, th, ca::Mode::infer);
    std::set<std::uint32_t> rows(act.source_rows.begin(), act.source_rows.end());
    if (!first) {
      CHECK(rows.size() <= previous.size());
      CHECK(std::includes(previous.begin(), previous.end(), rows.begin(), rows.end()));
    }
    for (std::uint32_t r : rows) CHECK(scored.scores[r] > th);
    previous = std::move(rows);
    first = false;
  }
}

TEST_CASE("select_top edges and threshold equivalence") {
  auto inst = make_ca_instance(7, 60, 350);
  const auto scored = ca::score(inst.context, inst.current, inst.weights);
  const std::size_t n = scored.voxels.size();
  REQUIRE(n > 10);

  CHECK(ca::select_top(scored, 0).retained_count() == 0);
  CHECK(ca::select_top(scored, n).retained_count() == n);
  CHECK(ca::select_top(scored, n + 50).retained_count() == n);

  const std::size_t k = n / 2;
  const auto top = ca::select_top(scored, k);
  REQUIRE(top.retained_count() == k);
  // equivalent to thresholding just under the k-th largest score when scores
  // are distinct
  std::vector<double> sorted = scored.scores;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double kth = sorted[k - 1];
  CHECK(sorted[k - 1] != sorted[k]);  // seeded scores are distinct
  const auto th = ca::activate(scored, kth - 1e-12, ca::Mode::infer);
  CHECK(th.source_rows == top.source_rows);
  // retained rows stay in context order
  CHECK(std::is_sorted(top.source_rows.begin(), top.source_rows.end()));
}

TEST_CASE("extract multiplies the branches and propagates to points") {
  auto inst = make_ca_instance(8, 50, 260);
  const auto scored = ca::score(inst.context, inst.current, inst.weights);
  const auto act = ca::activate(scored, 0.3, ca::Mode::infer);
  const auto res = ca::extract(act, inst.weights);

  const Mat inner = stack_apply(act.voxels.features, inst.weights, "ca.inner");
  const Mat inter = stack_apply(act.voxels.features, inst.weights, "ca.inter");
  REQUIRE(res.o_c.cols == 64);
  REQUIRE(res.o_c.rows == act.voxels.point_indices.size());
  std::size_t row = 0;
  for (std::size_t v = 0; v < act.retained_count(); ++v) {
    for (std::size_t p = act.voxels.point_offsets[v]; p < act.voxels.point_offsets[v + 1];
         ++p, ++row) {
      CHECK(res.point_indices[row] == act.voxels.point_indices[p]);
      for (std::size_t c = 0; c < 64; ++c) {
        CHECK(res.o_c.at(row, c) ==
              doctest::Approx(inner.at(v, c) * inter.at(v, c)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("score and extract agree with the oracle") {
  for (std::uint64_t seed = 200; seed < 208; ++seed) {
    auto fwd = test::make_forward_instance(seed, 70, 200);
    const VoxelSet context = unquery(fwd.hist_sets[0], fwd.current_sets[0]);
    const auto scored = ca::score(context, fwd.current_sets[0], fwd.weights);
    const auto act = ca::activate(scored, 0.1, ca::Mode::infer);
    const auto res = ca::extract(act, fwd.weights);

    oracle::ForwardOptions opt;
    opt.threshold = 0.1;
    const auto ref = oracle::dense_forward_reference(fwd.current_sets, fwd.hist_sets,
                                                     fwd.weights, opt);
    REQUIRE(scored.scores.size() == ref.scores.size());
    for (std::size_t i = 0; i < ref.scores.size(); ++i) {
      CHECK(std::abs(scored.scores[i] - ref.scores[i]) < 1e-6);
    }
    CHECK(act.source_rows == ref.retained);
    CHECK(max_abs_diff(res.o_c, ref.o_c) < 1e-6);
    CHECK(res.point_indices == ref.o_c_points);
  }
}

TEST_CASE("neighborhood pooling branch agrees with the oracle") {
  auto fwd = test::make_forward_instance(300, 60, 180);
  const VoxelSet context = unquery(fwd.hist_sets[0], fwd.current_sets[0]);
  const auto scored = ca::score(context, fwd.current_sets[0], fwd.weights);
  const auto act = ca::activate(scored, 0.0, ca::Mode::infer);
  const auto res = ca::extract(act, fwd.weights, true);

  oracle::ForwardOptions opt;
  opt.threshold = 0.0;
  opt.neighborhood_pool = true;
  const auto ref =
      oracle::dense_forward_reference(fwd.current_sets, fwd.hist_sets, fwd.weights, opt);
  CHECK(max_abs_diff(res.o_c, ref.o_c) < 1e-6);
}

TEST_SUITE_END();
