// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "stvq/types.hpp"
#include "stvq/voxelizer.hpp"

namespace stvq {

/// Coordinates are packed into one 64-bit key as three biased 21-bit fields,
/// so every component in [-2^20, 2^20) round-trips exactly (covers magnitudes
/// past +-10^6 cells). Out-of-range components throw.
inline constexpr std::int32_t kCoordBound = 1 << 20;

std::uint64_t pack_coord(const VoxelCoord& c);
VoxelCoord unpack_coord(std::uint64_t key);

/// Open-addressed map from packed coordinate to a 32-bit payload. Power-of-two
/// capacity, linear probing, max load factor 1/2.
class CoordMap {
 public:
  CoordMap() = default;
  explicit CoordMap(std::size_t expected);

  void reserve(std::size_t expected);

  /// Returns false when the key was already present (value left unchanged).
  bool insert(std::uint64_t key, std::uint32_t value);

  /// Returns the payload slot for key, inserting fallback first if absent.
  std::uint32_t& get_or_insert(std::uint64_t key, std::uint32_t fallback);

  const std::uint32_t* find(std::uint64_t key) const;

  std::size_t size() const { return count_; }

 private:
  void grow();
  std::size_t slot_of(std::uint64_t key) const;

  static constexpr std::uint64_t kEmpty = ~0ULL;  // packed keys use 63 bits

  std::vector<std::uint64_t> keys_;
  std::vector<std::uint32_t> vals_;
  std::uint64_t mask_ = 0;
  std::size_t count_ = 0;
};

/// Exact-match index over one voxel set: coordinate -> voxel row.
class SparseIndex {
 public:
  SparseIndex() = default;
  /// O(L) expected build. Throws InternalError on a duplicate coordinate,
  /// which a well-formed VoxelSet cannot contain.
  explicit SparseIndex(const VoxelSet& set);

  std::optional<std::uint32_t> find(const VoxelCoord& c) const;
  std::size_t size() const { return map_.size(); }

 private:
  CoordMap map_;
};

inline constexpr std::int32_t kNoMatch = -1;

/// Index-aligned match result: entry i is the matched row in the queried set
/// or kNoMatch, in which case downstream consumers substitute an all-zeros
/// feature row of feature_width.
struct QueryAlignment {
  std::vector<std::int32_t> match;
  std::size_t feature_width = 0;

  std::size_t size() const { return match.size(); }
  std::size_t matched_count() const;
};

/// For every current voxel, the historical voxel with the same coordinate
/// (or a placeholder). Both sets must share one scale.
QueryAlignment query(const VoxelSet& current, const VoxelSet& hist);
QueryAlignment query(const VoxelSet& current, const VoxelSet& hist,
                     const SparseIndex& hist_index);

/// The historical voxels whose coordinate is absent from the current set,
/// in historical-set order. Point indices keep referring to the historical
/// source cloud.
VoxelSet unquery(const VoxelSet& hist, const VoxelSet& current);
VoxelSet unquery(const VoxelSet& hist, const VoxelSet& current,
                 const SparseIndex& current_index);

/// Cross-scale alignment: fine coordinate (scale 1) -> coarse voxel whose
/// coordinate equals floor(fine / s) per axis. Throws on s < 1.
QueryAlignment project(const std::vector<VoxelCoord>& fine_coords, const VoxelSet& coarse);

/// Rows of `rows` gathered by the alignment; placeholder entries become zero
/// rows. rows must be the feature block of the queried set.
Mat gather_aligned(const QueryAlignment& a, const Mat& rows);

}  // namespace stvq
