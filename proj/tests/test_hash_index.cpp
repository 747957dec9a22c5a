// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <unordered_set>

#include "helpers.hpp"
#include "stvq/bench.hpp"
#include "stvq/hash_index.hpp"
#include "stvq/oracle.hpp"

using namespace stvq;

TEST_SUITE_BEGIN("hash_index");

namespace {

VoxelSet set_of(std::vector<VoxelCoord> coords, int scale = 1, std::size_t width = 3) {
  Rng rng(123);
  VoxelSet s;
  s.scale = scale;
  s.coords = std::move(coords);
  s.features = Mat(s.coords.size(), width);
  for (double& v : s.features.data) v = rng.uniform(-1, 1);
  s.point_offsets.resize(s.coords.size() + 1);
  s.point_indices.resize(s.coords.size());
  for (std::size_t i = 0; i < s.coords.size(); ++i) {
    s.point_offsets[i + 1] = static_cast<std::uint32_t>(i + 1);
    s.point_indices[i] = static_cast<std::uint32_t>(i);
  }
  return s;
}

}  // namespace

TEST_CASE("coordinate packing round trips across the full range") {
  Rng rng(1);
  for (int iter = 0; iter < 20000; ++iter) {
    VoxelCoord c{static_cast<std::int32_t>(rng.uniform_int(-1000000, 1000000)),
                 static_cast<std::int32_t>(rng.uniform_int(-1000000, 1000000)),
                 static_cast<std::int32_t>(rng.uniform_int(-1000000, 1000000))};
    CHECK(unpack_coord(pack_coord(c)) == c);
  }
  CHECK(unpack_coord(pack_coord(VoxelCoord{-kCoordBound, 0, kCoordBound - 1})) ==
        VoxelCoord{-kCoordBound, 0, kCoordBound - 1});
  CHECK_THROWS_AS(pack_coord(VoxelCoord{kCoordBound, 0, 0}), Error);
  CHECK_THROWS_AS(pack_coord(VoxelCoord{0, -kCoordBound - 1, 0}), Error);
}

TEST_CASE("packed keys are injective on distinct coordinates") {
  Rng rng(2);
  std::unordered_set<std::uint64_t> keys;
  std::unordered_set<std::uint64_t> raw;
  for (int iter = 0; iter < 50000; ++iter) {
    VoxelCoord c{static_cast<std::int32_t>(rng.uniform_int(-1000, 1000)),
                 static_cast<std::int32_t>(rng.uniform_int(-1000, 1000)),
                 static_cast<std::int32_t>(rng.uniform_int(-1000, 1000))};
    const std::uint64_t packed = pack_coord(c);
    const std::uint64_t id = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.i)) << 40) ^
                             (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.j)) << 20) ^
                             static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.k));
    if (raw.insert(id).second) {
      CHECK(keys.insert(packed).second);
    }
  }
}

TEST_CASE("index over an empty set resolves nothing") {
  const SparseIndex index(set_of({}));
  CHECK(index.size() == 0);
  CHECK(!index.find(VoxelCoord{0, 0, 0}));
}

TEST_CASE("small index resolves members and rejects others") {
  const SparseIndex index(set_of({{0, 0, 0}, {1, 0, 0}}));
  CHECK(index.find(VoxelCoord{0, 0, 0}) == std::uint32_t{0});
  CHECK(index.find(VoxelCoord{1, 0, 0}) == std::uint32_t{1});
  CHECK(!index.find(VoxelCoord{2, 0, 0}));
}

TEST_CASE("10k random distinct coords all resolve to their own row") {
  Rng rng(3);
  std::unordered_set<std::uint64_t> used;
  std::vector<VoxelCoord> coords;
  while (coords.size() < 10000) {
    VoxelCoord c{static_cast<std::int32_t>(rng.uniform_int(-100000, 100000)),
                 static_cast<std::int32_t>(rng.uniform_int(-100000, 100000)),
                 static_cast<std::int32_t>(rng.uniform_int(-100000, 100000))};
    if (used.insert(pack_coord(c)).second) coords.push_back(c);
  }
  const VoxelSet set = set_of(std::move(coords));
  const SparseIndex index(set);
  for (std::size_t v = 0; v < set.size(); ++v) {
    REQUIRE(index.find(set.coords[v]) == static_cast<std::uint32_t>(v));
  }
}

TEST_CASE("duplicate coordinates break the build invariant") {
  CHECK_THROWS_AS(SparseIndex(set_of({{1, 2, 3}, {1, 2, 3}})), InternalError);
}

TEST_CASE("query identity and disjoint cases") {
  const VoxelSet a = set_of({{0, 0, 0}, {1, 1, 1}, {2, 2, 2}});
  SUBCASE("identical coordinate sets align one-to-one") {
    const QueryAlignment q = query(a, a);
    REQUIRE(q.size() == 3);
    CHECK(q.matched_count() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(q.match[i] == static_cast<std::int32_t>(i));
  }
  SUBCASE("disjoint sets yield placeholders only") {
    const VoxelSet b = set_of({{9, 9, 9}, {8, 8, 8}});
    const QueryAlignment q = query(b, a);
    CHECK(q.matched_count() == 0);
    CHECK(std::all_of(q.match.begin(), q.match.end(),
                      [](std::int32_t m) { return m == kNoMatch; }));
  }
  SUBCASE("scale mismatch is an error") {
    const VoxelSet b = set_of({{0, 0, 0}}, 2);
    CHECK_THROWS_AS(query(a, b), ScaleMismatchError);
    CHECK_THROWS_AS(unquery(b, a), ScaleMismatchError);
  }
}

TEST_CASE("query agrees with the brute-force oracle on random scenes") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed * 77 + 1);
    const std::size_t n = static_cast<std::size_t>(rng.uniform_int(0, 400));
    const std::size_t m = static_cast<std::size_t>(rng.uniform_int(0, 1200));
    const auto inst = bench::make_match_instance(n, m, 0.3, seed, 2);
    const QueryAlignment fast = query(inst.current, inst.hist);
    const QueryAlignment slow = oracle::brute_match(inst.current, inst.hist);
    REQUIRE(fast.match == slow.match);
    CHECK(fast.matched_count() == inst.planted_matches);
  }
}

TEST_CASE("shunt partition: matched and context voxels split the history exactly") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = bench::make_match_instance(300, 900, 0.4, seed + 1000, 2);
    const QueryAlignment q = query(inst.current, inst.hist);
    const VoxelSet context = unquery(inst.hist, inst.current);

    std::unordered_set<std::uint64_t> matched_keys;
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (q.match[i] != kNoMatch) {
        matched_keys.insert(pack_coord(inst.hist.coords[static_cast<std::size_t>(q.match[i])]));
      }
    }
    // disjoint and jointly exhaustive over the historical set
    std::unordered_set<std::uint64_t> context_keys;
    for (const auto& c : context.coords) {
      const std::uint64_t key = pack_coord(c);
      CHECK(matched_keys.count(key) == 0);
      context_keys.insert(key);
    }
    CHECK(matched_keys.size() + context_keys.size() == inst.hist.size());
  }
}

TEST_CASE("unquery keeps historical order and identity/disjoint edges") {
  const VoxelSet hist = set_of({{0, 0, 0}, {5, 5, 5}, {1, 1, 1}, {7, 7, 7}});
  SUBCASE("identical sets leave no context") {
    CHECK(unquery(hist, hist).size() == 0);
  }
  SUBCASE("disjoint sets keep the full history") {
    const VoxelSet cur = set_of({{9, 9, 9}});
    const VoxelSet ctx = unquery(hist, cur);
    REQUIRE(ctx.size() == hist.size());
    for (std::size_t i = 0; i < hist.size(); ++i) CHECK(ctx.coords[i] == hist.coords[i]);
  }
  SUBCASE("partial overlap preserves order of the survivors") {
    const VoxelSet cur = set_of({{5, 5, 5}, {0, 0, 0}});
    const VoxelSet ctx = unquery(hist, cur);
    REQUIRE(ctx.size() == 2);
    CHECK(ctx.coords[0] == VoxelCoord{1, 1, 1});
    CHECK(ctx.coords[1] == VoxelCoord{7, 7, 7});
  }
}

TEST_CASE("project scatters coarse rows onto fine coordinates") {
  SUBCASE("scale 1 degenerates to exact matching") {
    const VoxelSet coarse = set_of({{3, 3, 3}, {4, 4, 4}}, 1);
    const QueryAlignment a = project({{4, 4, 4}, {0, 0, 0}}, coarse);
    CHECK(a.match[0] == 1);
    CHECK(a.match[1] == kNoMatch);
  }
  SUBCASE("floor division handles negatives") {
    const VoxelSet coarse = set_of({{2, -4, 1}}, 2);
    const QueryAlignment a = project({{5, -7, 2}}, coarse);
    CHECK(a.match[0] == 0);
  }
  SUBCASE("random pairs match the containment oracle at scale 4") {
    Rng rng(99);
    for (int iter = 0; iter < 20; ++iter) {
      std::vector<VoxelCoord> fine;
      for (int i = 0; i < 300; ++i) {
        fine.push_back(VoxelCoord{static_cast<std::int32_t>(rng.uniform_int(-40, 40)),
                                  static_cast<std::int32_t>(rng.uniform_int(-40, 40)),
                                  static_cast<std::int32_t>(rng.uniform_int(-40, 40))});
      }
      std::unordered_set<std::uint64_t> used;
      std::vector<VoxelCoord> coarse_coords;
      while (coarse_coords.size() < 120) {
        VoxelCoord c{static_cast<std::int32_t>(rng.uniform_int(-10, 10)),
                     static_cast<std::int32_t>(rng.uniform_int(-10, 10)),
                     static_cast<std::int32_t>(rng.uniform_int(-10, 10))};
        if (used.insert(pack_coord(c)).second) coarse_coords.push_back(c);
      }
      const VoxelSet coarse = set_of(std::move(coarse_coords), 4);
      const QueryAlignment a = project(fine, coarse);
      for (std::size_t i = 0; i < fine.size(); ++i) {
        std::int32_t expect = kNoMatch;
        const VoxelCoord want{floor_div(fine[i].i, 4), floor_div(fine[i].j, 4),
                              floor_div(fine[i].k, 4)};
        for (std::size_t j = 0; j < coarse.size(); ++j) {
          if (coarse.coords[j] == want) {
            expect = static_cast<std::int32_t>(j);
            break;
          }
        }
        REQUIRE(a.match[i] == expect);
      }
    }
  }
}

TEST_CASE("gather_aligned substitutes zero rows for placeholders") {
  const VoxelSet hist = set_of({{0, 0, 0}, {1, 1, 1}}, 1, 4);
  QueryAlignment a;
  a.feature_width = 4;
  a.match = {1, kNoMatch, 0};
  const Mat g = gather_aligned(a, hist.features);
  REQUIRE(g.rows == 3);
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(g.at(0, c) == hist.features.at(1, c));
    CHECK(g.at(1, c) == 0.0);
    CHECK(g.at(2, c) == hist.features.at(0, c));
  }
}

TEST_SUITE_END();
