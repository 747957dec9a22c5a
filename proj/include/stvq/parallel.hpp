// Copyright 2026 stvq contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace stvq {

/// Global worker count for parallel_for. Defaults to hardware concurrency.
void set_num_threads(int n);
int num_threads();

/// Runs fn(begin, end) over contiguous chunks of [0, n). Per-index work must
/// be independent; under that contract results are identical for every thread
/// count. Exceptions from workers are rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace stvq
