// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#include "stvq/context_activator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "stvq/hash_index.hpp"
#include "stvq/kernels.hpp"

namespace stvq::ca {

ScoredContext score(const VoxelSet& context, const VoxelSet& current,
                    const WeightBundle& w) {
  if (context.scale != 1 || current.scale != 1) {
    throw ScaleMismatchError("score: context and current sets must be at scale 1");
  }
  ScoredContext out;
  out.voxels = context;
  if (context.size() == 0) return out;

  // Union sequence: context rows first, then current rows, zero-padded to the
  // wider feature width so one stack applies to both.
  const std::size_t width = std::max(context.feature_width(), current.feature_width());
  Mat joint(context.size() + current.size(), width);
  for (std::size_t v = 0; v < context.size(); ++v) {
    std::memcpy(joint.row(v), context.features.row(v),
                context.feature_width() * sizeof(double));
  }
  for (std::size_t v = 0; v < current.size(); ++v) {
    std::memcpy(joint.row(context.size() + v), current.features.row(v),
                current.feature_width() * sizeof(double));
  }

  const Mat logits = stack_apply(joint, w, "ca.score");
  if (logits.cols != 1) throw DimensionError("score: scoring stack must end in width 1");
  out.scores.resize(context.size());
  for (std::size_t v = 0; v < context.size(); ++v) {
    out.scores[v] = 1.0 / (1.0 + std::exp(-logits.at(v, 0)));
  }
  return out;
}

namespace {

ActivatedContext take_rows(const ScoredContext& scored,
                           const std::vector<std::uint32_t>& rows) {
  ActivatedContext out;
  out.source_rows = rows;
  out.scores.reserve(rows.size());
  const VoxelSet& src = scored.voxels;
  out.voxels.scale = src.scale;
  out.voxels.tag = src.tag;
  out.voxels.features = Mat(rows.size(), src.feature_width());
  out.voxels.point_offsets.push_back(0);
  const auto& k = kernels::active();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::uint32_t v = rows[r];
    out.voxels.coords.push_back(src.coords[v]);
    std::memcpy(out.voxels.features.row(r), src.features.row(v),
                src.feature_width() * sizeof(double));
    k.scale(scored.scores[v], out.voxels.features.row(r), src.feature_width());
    out.scores.push_back(scored.scores[v]);
    for (std::uint32_t p : src.points_of(v)) out.voxels.point_indices.push_back(p);
    out.voxels.point_offsets.push_back(
        static_cast<std::uint32_t>(out.voxels.point_indices.size()));
  }
  return out;
}

}  // namespace

ActivatedContext activate(const ScoredContext& scored, double threshold, Mode mode) {
  std::vector<std::uint32_t> keep;
  keep.reserve(scored.voxels.size());
  for (std::size_t v = 0; v < scored.voxels.size(); ++v) {
    if (mode == Mode::train || scored.scores[v] > threshold) {
      keep.push_back(static_cast<std::uint32_t>(v));
    }
  }
  return take_rows(scored, keep);
}

ActivatedContext select_top(const ScoredContext& scored, std::size_t target_count) {
  const std::size_t n = scored.voxels.size();
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t take = std::min(target_count, n);
  std::partial_sort(order.begin(), order.begin() + take, order.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      if (scored.scores[a] != scored.scores[b]) {
                        return scored.scores[a] > scored.scores[b];
                      }
                      return a < b;
                    });
  std::vector<std::uint32_t> keep(order.begin(), order.begin() + take);
  std::sort(keep.begin(), keep.end());  // back to context order
  return take_rows(scored, keep);
}

namespace {

Mat neighborhood_mean(const VoxelSet& set) {
  const SparseIndex index(set);
  static constexpr std::array<std::array<std::int32_t, 3>, 6> kOffsets{
      {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};
  Mat out(set.size(), set.feature_width());
  const auto& k = kernels::active();
  for (std::size_t v = 0; v < set.size(); ++v) {
    double* row = out.row(v);
    std::memcpy(row, set.features.row(v), set.feature_width() * sizeof(double));
    std::size_t count = 1;
    for (const auto& off : kOffsets) {
      const VoxelCoord c{set.coords[v].i + off[0], set.coords[v].j + off[1],
                         set.coords[v].k + off[2]};
      if (auto hit = index.find(c)) {
        k.axpy(1.0, set.features.row(*hit), row, set.feature_width());
        ++count;
      }
    }
    k.scale(1.0 / static_cast<double>(count), row, set.feature_width());
  }
  return out;
}

}  // namespace

ExtractResult extract(const ActivatedContext& activated, const WeightBundle& w,
                      bool neighborhood_pool) {
  ExtractResult res;
  const VoxelSet& r = activated.voxels;
  if (r.size() == 0) {
    res.o_c = Mat(0, static_cast<std::size_t>(w.channel_dim));
    return res;
  }

  const Mat inner = stack_apply(r.features, w, "ca.inner");
  const Mat inter_in = neighborhood_pool ? neighborhood_mean(r) : r.features;
  const Mat inter = stack_apply(inter_in, w, "ca.inter");
  Mat prod(inner.rows, inner.cols);
  kernels::active().mul(inner.data.data(), inter.data.data(), prod.data.data(),
                        prod.data.size());

  res.point_indices.assign(r.point_indices.begin(), r.point_indices.end());
  res.o_c = Mat(res.point_indices.size(), prod.cols);
  std::size_t row = 0;
  for (std::size_t v = 0; v < r.size(); ++v) {
    for (std::size_t p = r.point_offsets[v]; p < r.point_offsets[v + 1]; ++p, ++row) {
      std::memcpy(res.o_c.row(row), prod.row(v), prod.cols * sizeof(double));
    }
  }
  return res;
}

}  // namespace stvq::ca
