// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#include "stvq/hash_index.hpp"

#include <bit>
#include <cstring>

#include "stvq/rng.hpp"

namespace stvq {

namespace {

void check_component(std::int32_t v) {
  if (v < -kCoordBound || v >= kCoordBound) {
    throw Error("voxel coordinate component " + std::to_string(v) +
                " outside packable range [-2^20, 2^20)");
  }
}

}  // namespace

std::uint64_t pack_coord(const VoxelCoord& c) {
  check_component(c.i);
  check_component(c.j);
  check_component(c.k);
  const std::uint64_t ui = static_cast<std::uint64_t>(c.i + kCoordBound);
  const std::uint64_t uj = static_cast<std::uint64_t>(c.j + kCoordBound);
  const std::uint64_t uk = static_cast<std::uint64_t>(c.k + kCoordBound);
  return (ui << 42) | (uj << 21) | uk;
}

VoxelCoord unpack_coord(std::uint64_t key) {
  constexpr std::uint64_t mask = (1ULL << 21) - 1;
  VoxelCoord c;
  c.i = static_cast<std::int32_t>((key >> 42) & mask) - kCoordBound;
  c.j = static_cast<std::int32_t>((key >> 21) & mask) - kCoordBound;
  c.k = static_cast<std::int32_t>(key & mask) - kCoordBound;
  return c;
}

CoordMap::CoordMap(std::size_t expected) { reserve(expected); }

void CoordMap::reserve(std::size_t expected) {
  std::size_t cap = std::bit_ceil(std::max<std::size_t>(16, expected * 2));
  if (cap <= keys_.size()) return;
  std::vector<std::uint64_t> old_keys = std::move(keys_);
  std::vector<std::uint32_t> old_vals = std::move(vals_);
  keys_.assign(cap, kEmpty);
  vals_.assign(cap, 0);
  mask_ = cap - 1;
  count_ = 0;
  for (std::size_t s = 0; s < old_keys.size(); ++s) {
    if (old_keys[s] != kEmpty) insert(old_keys[s], old_vals[s]);
  }
}

std::size_t CoordMap::slot_of(std::uint64_t key) const {
  return static_cast<std::size_t>(splitmix64(key)) & mask_;
}

bool CoordMap::insert(std::uint64_t key, std::uint32_t value) {
  if (keys_.empty() || (count_ + 1) * 2 > keys_.size()) grow();
  std::size_t s = slot_of(key);
  while (keys_[s] != kEmpty) {
    if (keys_[s] == key) return false;
    s = (s + 1) & mask_;
  }
  keys_[s] = key;
  vals_[s] = value;
  ++count_;
  return true;
}

std::uint32_t& CoordMap::get_or_insert(std::uint64_t key, std::uint32_t fallback) {
  if (keys_.empty() || (count_ + 1) * 2 > keys_.size()) grow();
  std::size_t s = slot_of(key);
  while (keys_[s] != kEmpty) {
    if (keys_[s] == key) return vals_[s];
    s = (s + 1) & mask_;
  }
  keys_[s] = key;
  vals_[s] = fallback;
  ++count_;
  return vals_[s];
}

const std::uint32_t* CoordMap::find(std::uint64_t key) const {
  if (keys_.empty()) return nullptr;
  std::size_t s = slot_of(key);
  while (keys_[s] != kEmpty) {
    if (keys_[s] == key) return &vals_[s];
    s = (s + 1) & mask_;
  }
  return nullptr;
}

void CoordMap::grow() { reserve(std::max<std::size_t>(8, count_ * 2)); }

SparseIndex::SparseIndex(const VoxelSet& set) : map_(set.size()) {
  for (std::size_t v = 0; v < set.size(); ++v) {
    if (!map_.insert(pack_coord(set.coords[v]), static_cast<std::uint32_t>(v))) {
      throw InternalError("duplicate coordinate in voxel set at row " + std::to_string(v));
    }
  }
}

std::optional<std::uint32_t> SparseIndex::find(const VoxelCoord& c) const {
  const std::uint32_t* v = map_.find(pack_coord(c));
  if (v == nullptr) return std::nullopt;
  return *v;
}

std::size_t QueryAlignment::matched_count() const {
  std::size_t n = 0;
  for (std::int32_t m : match) n += (m != kNoMatch);
  return n;
}

QueryAlignment query(const VoxelSet& current, const VoxelSet& hist) {
  return query(current, hist, SparseIndex(hist));
}

QueryAlignment query(const VoxelSet& current, const VoxelSet& hist,
                     const SparseIndex& hist_index) {
  if (current.scale != hist.scale) {
    throw ScaleMismatchError("query: current scale " + std::to_string(current.scale) +
                             " vs historical scale " + std::to_string(hist.scale));
  }
  QueryAlignment a;
  a.feature_width = hist.feature_width();
  a.match.resize(current.size(), kNoMatch);
  for (std::size_t v = 0; v < current.size(); ++v) {
    if (auto hit = hist_index.find(current.coords[v])) {
      a.match[v] = static_cast<std::int32_t>(*hit);
    }
  }
  return a;
}

namespace {

VoxelSet subset_rows(const VoxelSet& src, const std::vector<std::uint32_t>& rows) {
  VoxelSet out;
  out.scale = src.scale;
  out.tag = src.tag;
  out.coords.reserve(rows.size());
  out.features = Mat(rows.size(), src.feature_width());
  out.point_offsets.reserve(rows.size() + 1);
  out.point_offsets.push_back(0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::uint32_t v = rows[r];
    out.coords.push_back(src.coords[v]);
    std::memcpy(out.features.row(r), src.features.row(v),
                src.feature_width() * sizeof(double));
    for (std::uint32_t p : src.points_of(v)) out.point_indices.push_back(p);
    out.point_offsets.push_back(static_cast<std::uint32_t>(out.point_indices.size()));
  }
  return out;
}

}  // namespace

VoxelSet unquery(const VoxelSet& hist, const VoxelSet& current) {
  return unquery(hist, current, SparseIndex(current));
}

VoxelSet unquery(const VoxelSet& hist, const VoxelSet& current,
                 const SparseIndex& current_index) {
  if (current.scale != hist.scale) {
    throw ScaleMismatchError("unquery: historical scale " + std::to_string(hist.scale) +
                             " vs current scale " + std::to_string(current.scale));
  }
  std::vector<std::uint32_t> keep;
  for (std::size_t v = 0; v < hist.size(); ++v) {
    if (!current_index.find(hist.coords[v])) keep.push_back(static_cast<std::uint32_t>(v));
  }
  return subset_rows(hist, keep);
}

QueryAlignment project(const std::vector<VoxelCoord>& fine_coords, const VoxelSet& coarse) {
  if (coarse.scale < 1) throw Error("project: coarse scale must be >= 1");
  const SparseIndex index(coarse);
  QueryAlignment a;
  a.feature_width = coarse.feature_width();
  a.match.resize(fine_coords.size(), kNoMatch);
  const std::int32_t s = coarse.scale;
  for (std::size_t v = 0; v < fine_coords.size(); ++v) {
    const VoxelCoord c{floor_div(fine_coords[v].i, s), floor_div(fine_coords[v].j, s),
                       floor_div(fine_coords[v].k, s)};
    if (auto hit = index.find(c)) a.match[v] = static_cast<std::int32_t>(*hit);
  }
  return a;
}

Mat gather_aligned(const QueryAlignment& a, const Mat& rows) {
  Mat out(a.size(), rows.cols);
  for (std::size_t v = 0; v < a.size(); ++v) {
    if (a.match[v] != kNoMatch) {
      std::memcpy(out.row(v), rows.row(static_cast<std::size_t>(a.match[v])),
                  rows.cols * sizeof(double));
    }
  }
  return out;
}

}  // namespace stvq
