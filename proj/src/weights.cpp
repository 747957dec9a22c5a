// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#include "stvq/weights.hpp"

#include <cmath>

#include "stvq/kernels.hpp"
#include "stvq/parallel.hpp"
#include "stvq/rng.hpp"

namespace stvq {

NormLayer NormLayer::identity(std::size_t width) {
  NormLayer n;
  n.mean.assign(width, 0.0);
  n.var.assign(width, 1.0);
  n.gain.assign(width, 1.0);
  n.bias.assign(width, 0.0);
  return n;
}

namespace {

LinearLayer seeded_linear(std::uint64_t bundle_seed, const std::string& name,
                          std::size_t out, std::size_t in) {
  Rng rng(bundle_seed ^ fnv1a64(name));
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  LinearLayer l;
  l.w = Mat(out, in);
  for (double& v : l.w.data) v = rng.uniform(-bound, bound);
  l.b.resize(out);
  for (double& v : l.b) v = rng.uniform(-0.1, 0.1);
  return l;
}

}  // namespace

WeightBundle WeightBundle::seeded(const VoxelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  WeightBundle w;
  w.seed = seed;
  w.feature_dim = cfg.feature_dim;
  w.key_dim = cfg.key_dim;
  w.channel_dim = cfg.channel_dim;

  const std::size_t raw_current = 5;                      // x y z intensity t
  const std::size_t raw_hist = 5 + static_cast<std::size_t>(cfg.feature_dim);
  const std::size_t dk = static_cast<std::size_t>(cfg.key_dim);
  const std::size_t nc = static_cast<std::size_t>(cfg.channel_dim);

  auto add = [&](const std::string& name, std::size_t out, std::size_t in) {
    w.layers.emplace_back(name, seeded_linear(seed, name, out, in));
  };

  for (int s : cfg.scales) {
    const std::string p = "attn.s" + std::to_string(s);
    add(p + ".q", dk, raw_current);
    add(p + ".k", dk, raw_hist);
    add(p + ".v", dk, raw_hist);
  }
  add("fuse.l1", nc, cfg.scales.size() * dk);
  add("fuse.l2", nc, nc);
  add("fuse.l3", nc, nc);
  add("skip.l1", nc, raw_current);
  add("skip.l2", nc, nc);
  add("skip.l3", nc, nc);
  add("ca.score.l1", nc, raw_hist);
  add("ca.score.l2", nc, nc);
  add("ca.score.l3", 1, nc);
  add("ca.inner.l1", nc, raw_hist);
  add("ca.inner.l2", nc, nc);
  add("ca.inner.l3", nc, nc);
  add("ca.inter.l1", nc, raw_hist);
  add("ca.inter.l2", nc, nc);
  add("ca.inter.l3", nc, nc);

  w.norm = NormLayer::identity(nc);
  return w;
}

const LinearLayer& WeightBundle::linear(const std::string& name) const {
  for (const auto& [n, l] : layers) {
    if (n == name) return l;
  }
  throw Error("weight bundle has no layer named '" + name + "'");
}

bool WeightBundle::has_linear(const std::string& name) const {
  for (const auto& [n, l] : layers) {
    if (n == name) return true;
  }
  return false;
}

Mat linear_apply(const Mat& x, const LinearLayer& layer) {
  if (x.cols != layer.in_dim()) {
    throw DimensionError("linear_apply: input width " + std::to_string(x.cols) +
                         " does not match layer input " + std::to_string(layer.in_dim()));
  }
  const auto& k = kernels::active();
  Mat y(x.rows, layer.out_dim());
  parallel_for(x.rows, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double* xi = x.row(i);
      double* yi = y.row(i);
      for (std::size_t o = 0; o < layer.out_dim(); ++o) {
        yi[o] = k.dot(xi, layer.w.row(o), x.cols) + layer.b[o];
      }
    }
  });
  return y;
}

void relu_inplace(Mat& x) { kernels::active().relu(x.data.data(), x.data.size()); }

Mat stack_apply(const Mat& x, const LinearLayer& l1, const LinearLayer& l2,
                const LinearLayer& l3) {
  Mat h = linear_apply(x, l1);
  relu_inplace(h);
  h = linear_apply(h, l2);
  relu_inplace(h);
  return linear_apply(h, l3);
}

Mat stack_apply(const Mat& x, const WeightBundle& w, const std::string& prefix) {
  return stack_apply(x, w.linear(prefix + ".l1"), w.linear(prefix + ".l2"),
                     w.linear(prefix + ".l3"));
}

Mat norm_apply(const Mat& x, const NormLayer& n) {
  if (x.cols != n.width()) {
    throw DimensionError("norm_apply: width " + std::to_string(x.cols) +
                         " does not match norm width " + std::to_string(n.width()));
  }
  // Fold statistics into one multiply-add per channel.
  std::vector<double> sc(n.width()), sh(n.width());
  for (std::size_t c = 0; c < n.width(); ++c) {
    if (n.var[c] < 0.0) throw Error("norm variance must be non-negative");
    sc[c] = n.gain[c] / std::sqrt(n.var[c] + n.eps);
    sh[c] = n.bias[c] - n.mean[c] * sc[c];
  }
  const auto& k = kernels::active();
  Mat y(x.rows, x.cols);
  parallel_for(x.rows, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      k.madd(x.row(i), sc.data(), sh.data(), y.row(i), x.cols);
    }
  });
  return y;
}

}  // namespace stvq
