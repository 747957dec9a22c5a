// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>

namespace stvq::kernels {

/// Data-parallel inner loops shared by the forward paths (layer application,
/// attention, aggregation, score scaling). Scalar reference versions always
/// exist; wider variants are selected at runtime from CPU capabilities and
/// agree with the scalar path up to floating-point reassociation.
struct Kernels {
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out = a + b
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  // out = a * b, element-wise
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  // x *= s
  void (*scale)(double s, double* x, std::size_t n);
  void (*relu)(double* x, std::size_t n);
  // out = a * b + c, element-wise
  void (*madd)(const double* a, const double* b, const double* c, double* out,
               std::size_t n);
};

enum class Isa { scalar, avx2 };

const Kernels& scalar_kernels();

bool avx2_supported();
/// Valid only when avx2_supported() returns true.
const Kernels& avx2_kernels();

/// Best ISA for this machine; the STVQ_ISA environment variable ("scalar",
/// "avx2") overrides detection.
Isa best_isa();

const Kernels& active();
Isa active_isa();
/// Throws Error if the requested ISA is not available on this machine.
void set_active_isa(Isa isa);

std::string_view isa_name(Isa isa);

}  // namespace stvq::kernels
