// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#include "stvq/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <string>

#include "stvq/types.hpp"

namespace stvq::kernels {

bool avx2_supported() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

Isa best_isa() {
  if (const char* env = std::getenv("STVQ_ISA")) {
    if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
    if (std::strcmp(env, "avx2") == 0) {
      if (!avx2_supported()) throw Error("STVQ_ISA=avx2 but CPU lacks AVX2/FMA");
      return Isa::avx2;
    }
    throw Error(std::string("unrecognized STVQ_ISA value: ") + env);
  }
  return avx2_supported() ? Isa::avx2 : Isa::scalar;
}

namespace {
std::atomic<const Kernels*> g_active{nullptr};
std::atomic<Isa> g_isa{Isa::scalar};

void init_once() {
  if (g_active.load(std::memory_order_acquire) != nullptr) return;
  const Isa isa = best_isa();
  g_isa.store(isa);
  g_active.store(isa == Isa::avx2 ? &avx2_kernels() : &scalar_kernels(),
                 std::memory_order_release);
}
}  // namespace

const Kernels& active() {
  init_once();
  return *g_active.load(std::memory_order_acquire);
}

Isa active_isa() {
  init_once();
  return g_isa.load();
}

void set_active_isa(Isa isa) {
  if (isa == Isa::avx2 && !avx2_supported()) {
    throw Error("AVX2 kernels requested but CPU lacks AVX2/FMA");
  }
  g_isa.store(isa);
  g_active.store(isa == Isa::avx2 ? &avx2_kernels() : &scalar_kernels(),
                 std::memory_order_release);
}

}  // namespace stvq::kernels
