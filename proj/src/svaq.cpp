// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#include "stvq/svaq.hpp"

#include <cmath>
#include <cstring>

#include "stvq/kernels.hpp"
#include "stvq/parallel.hpp"

namespace stvq::svaq {

namespace {

std::string scale_prefix(int scale) { return "attn.s" + std::to_string(scale); }

}  // namespace

AttentionOutput attention(const VoxelSet& current, const QueryAlignment& alignment,
                          const VoxelSet& hist, const WeightBundle& w, AttentionMode mode,
                          Mat* attn_weights) {
  if (alignment.size() != current.size()) {
    throw DimensionError("attention: alignment length does not match current set");
  }
  const LinearLayer& lq = w.linear(scale_prefix(current.scale) + ".q");
  const LinearLayer& lk = w.linear(scale_prefix(current.scale) + ".k");
  const LinearLayer& lv = w.linear(scale_prefix(current.scale) + ".v");
  const std::size_t dk = lq.out_dim();

  AttentionOutput out;
  out.scale = current.scale;
  out.t = Mat(current.size(), dk);
  if (attn_weights != nullptr) *attn_weights = Mat(current.size(), current.size());
  if (current.size() == 0) return out;

  const Mat gathered = gather_aligned(alignment, hist.features);
  const Mat v = linear_apply(gathered, lv);

  if (mode == AttentionMode::paired) {
    // Degenerate attention: softmax over the single matched key is 1.
    for (std::size_t i = 0; i < current.size(); ++i) {
      if (alignment.match[i] != kNoMatch) {
        std::memcpy(out.t.row(i), v.row(i), dk * sizeof(double));
        if (attn_weights != nullptr) attn_weights->at(i, i) = 1.0;
      }
    }
    return out;
  }

  const Mat q = linear_apply(current.features, lq);
  const Mat k = linear_apply(gathered, lk);
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  const std::size_t keys = k.rows;

  std::vector<std::uint32_t> unmasked;
  unmasked.reserve(keys);
  for (std::size_t j = 0; j < keys; ++j) {
    if (alignment.match[j] != kNoMatch) unmasked.push_back(static_cast<std::uint32_t>(j));
  }
  if (unmasked.empty()) return out;  // fully masked: all rows stay zero

  const auto& kn = kernels::active();
  parallel_for(current.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> row(unmasked.size());
    for (std::size_t i = begin; i < end; ++i) {
      const double* qi = q.row(i);
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t u = 0; u < unmasked.size(); ++u) {
        row[u] = kn.dot(qi, k.row(unmasked[u]), dk) * inv_sqrt_dk;
        mx = std::max(mx, row[u]);
      }
      double denom = 0.0;
      for (double& s : row) {
        s = std::exp(s - mx);
        denom += s;
      }
      const double inv = 1.0 / denom;
      double* ti = out.t.row(i);
      for (std::size_t u = 0; u < unmasked.size(); ++u) {
        kn.axpy(row[u] * inv, v.row(unmasked[u]), ti, dk);
        if (attn_weights != nullptr) attn_weights->at(i, unmasked[u]) = row[u] * inv;
      }
    }
  });
  return out;
}

Mat fuse(const std::vector<AttentionOutput>& per_scale,
         const std::vector<const VoxelSet*>& current_sets, const WeightBundle& w) {
  if (per_scale.empty() || per_scale.size() != current_sets.size()) {
    throw DimensionError("fuse: one attention output per scale is required");
  }
  const std::size_t fine_rows = per_scale[0].t.rows;
  const std::size_t dk = per_scale[0].t.cols;
  const std::vector<VoxelCoord>& fine_coords = current_sets[0]->coords;
  if (fine_coords.size() != fine_rows) {
    throw DimensionError("fuse: fine coordinate count does not match scale-1 rows");
  }

  Mat concat(fine_rows, per_scale.size() * dk);
  for (std::size_t r = 0; r < fine_rows; ++r) {
    std::memcpy(concat.row(r), per_scale[0].t.row(r), dk * sizeof(double));
  }
  for (std::size_t s = 1; s < per_scale.size(); ++s) {
    if (per_scale[s].t.rows != current_sets[s]->size()) {
      throw DimensionError("fuse: attention rows do not match coarse set size");
    }
    const QueryAlignment proj = project(fine_coords, *current_sets[s]);
    const Mat scattered = gather_aligned(proj, per_scale[s].t);
    if (scattered.rows != fine_rows) {
      throw DimensionError("fuse: projected row count mismatch");
    }
    for (std::size_t r = 0; r < fine_rows; ++r) {
      std::memcpy(concat.row(r) + s * dk, scattered.row(r), dk * sizeof(double));
    }
  }
  return stack_apply(concat, w, "fuse");
}

ForwardResult forward(const std::vector<VoxelSet>& current_sets,
                      const std::vector<VoxelSet>& hist_sets, const WeightBundle& w,
                      AttentionMode mode) {
  if (current_sets.empty() || current_sets.size() != hist_sets.size()) {
    throw DimensionError("forward: current and historical set lists must align");
  }
  if (current_sets[0].scale != 1) throw Error("forward: first scale must be 1");

  ForwardResult res;
  std::vector<AttentionOutput> per_scale;
  std::vector<const VoxelSet*> set_ptrs;
  per_scale.reserve(current_sets.size());
  for (std::size_t s = 0; s < current_sets.size(); ++s) {
    QueryAlignment a = query(current_sets[s], hist_sets[s]);
    per_scale.push_back(attention(current_sets[s], a, hist_sets[s], w, mode));
    res.alignments.push_back(std::move(a));
    set_ptrs.push_back(&current_sets[s]);
  }

  const Mat t_o = fuse(per_scale, set_ptrs, w);
  const Mat skip = stack_apply(current_sets[0].features, w, "skip");
  if (!skip.same_shape(t_o)) throw DimensionError("forward: skip/fusion width mismatch");

  Mat summed(skip.rows, skip.cols);
  kernels::active().add(skip.data.data(), t_o.data.data(), summed.data.data(),
                        summed.data.size());
  const Mat normed = norm_apply(summed, w.norm);
  res.o_v = propagate_to_points(current_sets[0], normed);
  return res;
}

}  // namespace stvq::svaq
