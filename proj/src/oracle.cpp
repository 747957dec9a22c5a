// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#include "stvq/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace stvq::oracle {

namespace {

// Plain helpers, deliberately independent of the production kernels.

Mat lin(const Mat& x, const LinearLayer& l) {
  if (x.cols != l.in_dim()) throw DimensionError("oracle lin: width mismatch");
  Mat y(x.rows, l.out_dim());
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t o = 0; o < l.out_dim(); ++o) {
      double s = l.b[o];
      for (std::size_t c = 0; c < x.cols; ++c) s += x.at(i, c) * l.w.at(o, c);
      y.at(i, o) = s;
    }
  }
  return y;
}

Mat relu(Mat x) {
  for (double& v : x.data) {
    if (v < 0.0) v = 0.0;
  }
  return x;
}

Mat stack3(const Mat& x, const WeightBundle& w, const std::string& p) {
  return lin(relu(lin(relu(lin(x, w.linear(p + ".l1"))), w.linear(p + ".l2"))),
             w.linear(p + ".l3"));
}

std::int32_t fdiv(std::int32_t a, std::int32_t s) {
  std::int32_t q = a / s;
  if (a % s != 0 && ((a < 0) != (s < 0))) --q;
  return q;
}

}  // namespace

QueryAlignment brute_match(const VoxelSet& current, const VoxelSet& hist) {
  if (current.scale != hist.scale) {
    throw ScaleMismatchError("brute_match: sets at different scales");
  }
  QueryAlignment a;
  a.feature_width = hist.feature_width();
  a.match.resize(current.size(), kNoMatch);
  for (std::size_t i = 0; i < current.size(); ++i) {
    for (std::size_t j = 0; j < hist.size(); ++j) {
      if (current.coords[i] == hist.coords[j]) {
        a.match[i] = static_cast<std::int32_t>(j);
        break;
      }
    }
  }
  return a;
}

std::vector<std::vector<std::int32_t>> knn_points(const std::vector<Point>& query_pts,
                                                  const std::vector<Point>& ref_pts,
                                                  std::size_t k) {
  if (k < 1) throw Error("knn_points: k must be >= 1");
  std::vector<std::vector<std::int32_t>> out(query_pts.size());
  std::vector<std::uint32_t> order(ref_pts.size());
  std::vector<double> d2(ref_pts.size());
  for (std::size_t q = 0; q < query_pts.size(); ++q) {
    const Point& qp = query_pts[q];
    for (std::size_t r = 0; r < ref_pts.size(); ++r) {
      const double dx = qp.x - ref_pts[r].x;
      const double dy = qp.y - ref_pts[r].y;
      const double dz = qp.z - ref_pts[r].z;
      d2[r] = dx * dx + dy * dy + dz * dz;
    }
    std::iota(order.begin(), order.end(), 0);
    const std::size_t take = std::min(k, ref_pts.size());
    std::partial_sort(order.begin(), order.begin() + take, order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                        if (d2[a] != d2[b]) return d2[a] < d2[b];
                        return a < b;
                      });
    auto& row = out[q];
    row.assign(order.begin(), order.begin() + take);
    row.resize(k, -1);
  }
  return out;
}

ForwardReference dense_forward_reference(const std::vector<VoxelSet>& current_sets,
                                         const std::vector<VoxelSet>& hist_sets,
                                         const WeightBundle& w, const ForwardOptions& opt) {
  ForwardReference ref;
  const std::size_t n_scales = current_sets.size();
  const std::size_t dk = static_cast<std::size_t>(w.key_dim);

  // Per-scale attention from scratch, with linear-scan matching.
  for (std::size_t s = 0; s < n_scales; ++s) {
    const VoxelSet& cur = current_sets[s];
    const VoxelSet& hist = hist_sets[s];
    const QueryAlignment align = brute_match(cur, hist);

    Mat gathered(cur.size(), hist.feature_width());
    for (std::size_t i = 0; i < cur.size(); ++i) {
      if (align.match[i] != kNoMatch) {
        for (std::size_t c = 0; c < hist.feature_width(); ++c) {
          gathered.at(i, c) = hist.features.at(static_cast<std::size_t>(align.match[i]), c);
        }
      }
    }
    const std::string p = "attn.s" + std::to_string(cur.scale);
    const Mat q = lin(cur.features, w.linear(p + ".q"));
    const Mat k = lin(gathered, w.linear(p + ".k"));
    const Mat v = lin(gathered, w.linear(p + ".v"));

    Mat t(cur.size(), dk);
    if (opt.paired) {
      for (std::size_t i = 0; i < cur.size(); ++i) {
        if (align.match[i] != kNoMatch) {
          for (std::size_t c = 0; c < dk; ++c) t.at(i, c) = v.at(i, c);
        }
      }
    } else {
      const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
      for (std::size_t i = 0; i < cur.size(); ++i) {
        std::vector<double> logits(cur.size(), 0.0);
        double mx = -std::numeric_limits<double>::infinity();
        bool any = false;
        for (std::size_t j = 0; j < cur.size(); ++j) {
          if (align.match[j] == kNoMatch) continue;
          double dot = 0.0;
          for (std::size_t c = 0; c < dk; ++c) dot += q.at(i, c) * k.at(j, c);
          logits[j] = dot * scale;
          mx = std::max(mx, logits[j]);
          any = true;
        }
        if (!any) continue;
        double denom = 0.0;
        for (std::size_t j = 0; j < cur.size(); ++j) {
          if (align.match[j] != kNoMatch) denom += std::exp(logits[j] - mx);
        }
        for (std::size_t j = 0; j < cur.size(); ++j) {
          if (align.match[j] == kNoMatch) continue;
          const double a = std::exp(logits[j] - mx) / denom;
          for (std::size_t c = 0; c < dk; ++c) t.at(i, c) += a * v.at(j, c);
        }
      }
    }
    ref.t_per_scale.push_back(std::move(t));
  }

  // Fusion: scatter coarse rows onto fine coordinates by containment scan.
  const VoxelSet& fine = current_sets[0];
  Mat concat(fine.size(), n_scales * dk);
  for (std::size_t i = 0; i < fine.size(); ++i) {
    for (std::size_t c = 0; c < dk; ++c) concat.at(i, c) = ref.t_per_scale[0].at(i, c);
  }
  for (std::size_t s = 1; s < n_scales; ++s) {
    const VoxelSet& coarse = current_sets[s];
    for (std::size_t i = 0; i < fine.size(); ++i) {
      const VoxelCoord want{fdiv(fine.coords[i].i, coarse.scale),
                            fdiv(fine.coords[i].j, coarse.scale),
                            fdiv(fine.coords[i].k, coarse.scale)};
      for (std::size_t j = 0; j < coarse.size(); ++j) {
        if (coarse.coords[j] == want) {
          for (std::size_t c = 0; c < dk; ++c) {
            concat.at(i, s * dk + c) = ref.t_per_scale[s].at(j, c);
          }
          break;
        }
      }
    }
  }
  ref.t_o = stack3(concat, w, "fuse");

  // Skip, norm, propagation.
  const Mat skip = stack3(fine.features, w, "skip");
  Mat summed(skip.rows, skip.cols);
  for (std::size_t i = 0; i < summed.data.size(); ++i) {
    summed.data[i] = skip.data[i] + ref.t_o.data[i];
  }
  Mat normed(summed.rows, summed.cols);
  for (std::size_t i = 0; i < summed.rows; ++i) {
    for (std::size_t c = 0; c < summed.cols; ++c) {
      normed.at(i, c) = (summed.at(i, c) - w.norm.mean[c]) /
                            std::sqrt(w.norm.var[c] + w.norm.eps) * w.norm.gain[c] +
                        w.norm.bias[c];
    }
  }
  ref.o_v = Mat(fine.point_indices.size(), normed.cols);
  for (std::size_t v = 0; v < fine.size(); ++v) {
    for (std::size_t p = fine.point_offsets[v]; p < fine.point_offsets[v + 1]; ++p) {
      for (std::size_t c = 0; c < normed.cols; ++c) {
        ref.o_v.at(fine.point_indices[p], c) = normed.at(v, c);
      }
    }
  }

  // Context stream: unmatched historical voxels at scale 1, scored against
  // the current set, selected, extracted.
  const VoxelSet& hist1 = hist_sets[0];
  std::vector<std::uint32_t> context_rows;
  for (std::size_t j = 0; j < hist1.size(); ++j) {
    bool matched = false;
    for (std::size_t i = 0; i < fine.size() && !matched; ++i) {
      matched = fine.coords[i] == hist1.coords[j];
    }
    if (!matched) context_rows.push_back(static_cast<std::uint32_t>(j));
  }

  const std::size_t ctx = context_rows.size();
  const std::size_t cw = hist1.feature_width();
  const std::size_t width = std::max(cw, fine.feature_width());
  Mat joint(ctx + fine.size(), width);
  for (std::size_t r = 0; r < ctx; ++r) {
    for (std::size_t c = 0; c < cw; ++c) {
      joint.at(r, c) = hist1.features.at(context_rows[r], c);
    }
  }
  for (std::size_t r = 0; r < fine.size(); ++r) {
    for (std::size_t c = 0; c < fine.feature_width(); ++c) {
      joint.at(ctx + r, c) = fine.features.at(r, c);
    }
  }
  ref.scores.resize(ctx);
  if (ctx != 0) {
    const Mat logits = stack3(joint, w, "ca.score");
    for (std::size_t r = 0; r < ctx; ++r) {
      ref.scores[r] = 1.0 / (1.0 + std::exp(-logits.at(r, 0)));
    }
  }

  if (opt.target_count >= 0) {
    std::vector<std::uint32_t> order(ctx);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (ref.scores[a] != ref.scores[b]) return ref.scores[a] > ref.scores[b];
      return a < b;
    });
    const std::size_t take = std::min<std::size_t>(ctx, static_cast<std::size_t>(opt.target_count));
    ref.retained.assign(order.begin(), order.begin() + take);
    std::sort(ref.retained.begin(), ref.retained.end());
  } else {
    for (std::size_t r = 0; r < ctx; ++r) {
      if (opt.train_mode || ref.scores[r] > opt.threshold) {
        ref.retained.push_back(static_cast<std::uint32_t>(r));
      }
    }
  }

  Mat r_feats(ref.retained.size(), cw);
  for (std::size_t r = 0; r < ref.retained.size(); ++r) {
    const std::uint32_t row = context_rows[ref.retained[r]];
    for (std::size_t c = 0; c < cw; ++c) {
      r_feats.at(r, c) = hist1.features.at(row, c) * ref.scores[ref.retained[r]];
    }
  }

  if (ref.retained.empty()) {
    ref.o_c = Mat(0, static_cast<std::size_t>(w.channel_dim));
    return ref;
  }

  const Mat inner = stack3(r_feats, w, "ca.inner");
  Mat inter_in = r_feats;
  if (opt.neighborhood_pool) {
    Mat pooled(r_feats.rows, r_feats.cols);
    for (std::size_t a = 0; a < ref.retained.size(); ++a) {
      const VoxelCoord ca = hist1.coords[context_rows[ref.retained[a]]];
      for (std::size_t c = 0; c < cw; ++c) pooled.at(a, c) = r_feats.at(a, c);
      std::size_t count = 1;
      for (std::size_t b = 0; b < ref.retained.size(); ++b) {
        const VoxelCoord cb = hist1.coords[context_rows[ref.retained[b]]];
        const int manhattan = std::abs(ca.i - cb.i) + std::abs(ca.j - cb.j) + std::abs(ca.k - cb.k);
        if (manhattan == 1) {
          for (std::size_t c = 0; c < cw; ++c) pooled.at(a, c) += r_feats.at(b, c);
          ++count;
        }
      }
      for (std::size_t c = 0; c < cw; ++c) pooled.at(a, c) /= static_cast<double>(count);
    }
    inter_in = std::move(pooled);
  }
  const Mat inter = stack3(inter_in, w, "ca.inter");

  std::size_t total_points = 0;
  for (std::uint32_t r : ref.retained) {
    const std::uint32_t row = context_rows[r];
    total_points += hist1.point_offsets[row + 1] - hist1.point_offsets[row];
  }
  ref.o_c = Mat(total_points, inner.cols);
  std::size_t out_row = 0;
  for (std::size_t a = 0; a < ref.retained.size(); ++a) {
    const std::uint32_t row = context_rows[ref.retained[a]];
    for (std::size_t p = hist1.point_offsets[row]; p < hist1.point_offsets[row + 1]; ++p) {
      for (std::size_t c = 0; c < inner.cols; ++c) {
        ref.o_c.at(out_row, c) = inner.at(a, c) * inter.at(a, c);
      }
      ref.o_c_points.push_back(hist1.point_indices[p]);
      ++out_row;
    }
  }
  return ref;
}

}  // namespace stvq::oracle
