// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stvq {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rotation failed the orthonormality / determinant check.
class InvalidPoseError : public Error {
 public:
  using Error::Error;
};

/// A point carried a non-finite coordinate or attribute.
class InvalidPointError : public Error {
 public:
  using Error::Error;
};

/// Two voxel sets with different scales were combined.
class ScaleMismatchError : public Error {
 public:
  using Error::Error;
};

/// Matrix / layer shapes do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content; message carries the offending position.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A structural invariant that callers cannot violate was violated anyway.
class InternalError : public Error {
 public:
  using Error::Error;
};

/// Dense row-major matrix of doubles. All feature blocks in the pipeline are
/// small (width <= a few hundred), so a flat vector is enough.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  bool empty() const { return rows == 0 || cols == 0; }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

}  // namespace stvq
