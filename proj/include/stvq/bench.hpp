// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "stvq/voxelizer.hpp"

namespace stvq::bench {

/// Query-scaling benchmark: per size N it builds a current set of N distinct
/// voxels and a historical set of M = ratio_m * N voxels sharing match_ratio
/// of the current coordinates, then times index build + query against the
/// quadratic references.
struct BenchOptions {
  std::vector<std::size_t> sizes{10000, 20000, 40000, 80000, 160000, 320000};
  double match_ratio = 0.3;
  double ratio_m = 3.0;
  int repeat = 5;                  // medians over this many timed runs
  std::size_t brute_max = 40000;   // largest N the brute scan runs at
  std::size_t knn_max = 10000;     // largest N the exact KNN baseline runs at
  std::uint64_t seed = 42;
};

struct BenchRow {
  std::size_t n = 0;
  std::size_t m = 0;
  double hash_ms = -1.0;   // median; -1 when not run
  double brute_ms = -1.0;
  double knn_ms = -1.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  double hash_slope = 0.0;   // log-log least-squares slope over completed sizes
  double brute_slope = 0.0;
  double knn_slope = 0.0;

  nlohmann::json to_json() const;
};

BenchReport run_bench(const BenchOptions& opt);

/// Deterministic instance generator shared with the acceptance tests: all
/// coordinates distinct within each set, exactly round(match_ratio * n)
/// historical coordinates equal to current ones.
struct MatchInstance {
  VoxelSet current;
  VoxelSet hist;
  std::size_t planted_matches = 0;
};
MatchInstance make_match_instance(std::size_t n, std::size_t m, double match_ratio,
                                  std::uint64_t seed, std::size_t feature_width = 1);

}  // namespace stvq::bench
