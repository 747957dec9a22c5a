// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#include "stvq/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_set>

#include "stvq/hash_index.hpp"
#include "stvq/oracle.hpp"
#include "stvq/rng.hpp"

namespace stvq::bench {

namespace {

using Clock = std::chrono::steady_clock;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double fit_slope(const std::vector<std::pair<double, double>>& pts) {
  // least squares on (ln n, ln t)
  if (pts.size() < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : pts) {
    const double lx = std::log(x), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(pts.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

VoxelCoord random_coord(Rng& rng) {
  return VoxelCoord{static_cast<std::int32_t>(rng.uniform_int(-100000, 100000)),
                    static_cast<std::int32_t>(rng.uniform_int(-100000, 100000)),
                    static_cast<std::int32_t>(rng.uniform_int(-500, 500))};
}

VoxelSet set_from_coords(std::vector<VoxelCoord> coords, std::size_t width, FrameTag tag,
                         Rng& rng) {
  VoxelSet set;
  set.scale = 1;
  set.tag = tag;
  set.features = Mat(coords.size(), width);
  for (double& v : set.features.data) v = rng.uniform(-1.0, 1.0);
  set.point_offsets.resize(coords.size() + 1);
  set.point_indices.resize(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    set.point_offsets[i + 1] = static_cast<std::uint32_t>(i + 1);
    set.point_indices[i] = static_cast<std::uint32_t>(i);
  }
  set.coords = std::move(coords);
  return set;
}

}  // namespace

MatchInstance make_match_instance(std::size_t n, std::size_t m, double match_ratio,
                                  std::uint64_t seed, std::size_t feature_width) {
  Rng rng(seed);
  const std::size_t planted = std::min(m, static_cast<std::size_t>(
                                              std::llround(match_ratio * static_cast<double>(n))));

  // One global pool of distinct coordinates; the historical set reuses a
  // random subset of the current ones and fresh coordinates for the rest.
  std::unordered_set<std::uint64_t> used;
  used.reserve((n + m) * 2);
  auto fresh = [&]() {
    for (;;) {
      VoxelCoord c = random_coord(rng);
      if (used.insert(pack_coord(c)).second) return c;
    }
  };

  std::vector<VoxelCoord> current(n);
  for (auto& c : current) c = fresh();

  std::vector<VoxelCoord> hist;
  hist.reserve(m);
  // Sample `planted` distinct current rows via partial Fisher-Yates.
  std::vector<std::uint32_t> pick(n);
  for (std::size_t i = 0; i < n; ++i) pick[i] = static_cast<std::uint32_t>(i);
  for (std::size_t i = 0; i < planted; ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n - i) - 1));
    std::swap(pick[i], pick[j]);
    hist.push_back(current[pick[i]]);
  }
  while (hist.size() < m) hist.push_back(fresh());
  // Shuffle so planted matches are not clustered at the front.
  for (std::size_t i = hist.size(); i > 1; --i) {
    const std::size_t j =
        static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(hist[i - 1], hist[j]);
  }

  MatchInstance inst;
  inst.planted_matches = planted;
  inst.current = set_from_coords(std::move(current), feature_width, FrameTag::current, rng);
  inst.hist = set_from_coords(std::move(hist), feature_width, FrameTag::historical, rng);
  return inst;
}

nlohmann::json BenchReport::to_json() const {
  nlohmann::json jrows = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json jr{{"n", r.n}, {"m", r.m}};
    if (r.hash_ms >= 0) jr["hash_ms"] = r.hash_ms;
    if (r.brute_ms >= 0) jr["brute_ms"] = r.brute_ms;
    if (r.knn_ms >= 0) jr["knn_ms"] = r.knn_ms;
    jrows.push_back(jr);
  }
  return nlohmann::json{{"schema_version", 1},
                        {"rows", jrows},
                        {"slopes",
                         {{"hash", hash_slope}, {"brute", brute_slope}, {"knn", knn_slope}}}};
}

BenchReport run_bench(const BenchOptions& opt) {
  BenchReport report;
  std::vector<std::pair<double, double>> hash_pts, brute_pts, knn_pts;
  volatile std::size_t sink = 0;  // keep timed work alive

  for (std::size_t size_idx = 0; size_idx < opt.sizes.size(); ++size_idx) {
    const std::size_t n = opt.sizes[size_idx];
    const std::size_t m = static_cast<std::size_t>(std::llround(opt.ratio_m * static_cast<double>(n)));
    MatchInstance inst =
        make_match_instance(n, m, opt.match_ratio, opt.seed + size_idx, 1);

    BenchRow row;
    row.n = n;
    row.m = m;

    {
      std::vector<double> times;
      for (int r = 0; r <= opt.repeat; ++r) {  // first run is a discarded warm-up
        const auto t0 = Clock::now();
        const SparseIndex index(inst.hist);
        const QueryAlignment a = query(inst.current, inst.hist, index);
        const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        sink = sink + a.matched_count();
        if (r > 0) times.push_back(ms);
      }
      row.hash_ms = median(times);
      hash_pts.emplace_back(static_cast<double>(n), row.hash_ms);
    }

    if (n <= opt.brute_max) {
      std::vector<double> times;
      for (int r = 0; r <= std::max(1, opt.repeat / 2); ++r) {
        const auto t0 = Clock::now();
        const QueryAlignment a = oracle::brute_match(inst.current, inst.hist);
        const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        sink = sink + a.matched_count();
        if (r > 0) times.push_back(ms);
      }
      row.brute_ms = median(times);
      brute_pts.emplace_back(static_cast<double>(n), row.brute_ms);
    }

    if (n <= opt.knn_max) {
      Rng rng(opt.seed * 7919 + size_idx);
      std::vector<Point> qpts(n), rpts(m);
      for (auto& p : qpts) p = Point{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-2, 2), 0, 0};
      for (auto& p : rpts) p = Point{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-2, 2), 0, 0};
      std::vector<double> times;
      for (int r = 0; r <= std::max(1, opt.repeat / 2); ++r) {
        const auto t0 = Clock::now();
        const auto nn = oracle::knn_points(qpts, rpts, 1);
        const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        sink = sink + static_cast<std::size_t>(nn[0][0]);
        if (r > 0) times.push_back(ms);
      }
      row.knn_ms = median(times);
      knn_pts.emplace_back(static_cast<double>(n), row.knn_ms);
    }

    report.rows.push_back(row);
  }

  report.hash_slope = fit_slope(hash_pts);
  report.brute_slope = fit_slope(brute_pts);
  report.knn_slope = fit_slope(knn_pts);
  (void)sink;
  return report;
}

}  // namespace stvq::bench
