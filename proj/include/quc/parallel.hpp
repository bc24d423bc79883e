#pragma once

#include <cstddef>
#include <functional>

namespace quc {

/// Worker count: hardware concurrency, capped by the QUC_THREADS environment variable.
unsigned worker_count();

/// Runs body(begin, end) over contiguous chunks of [0, n). Chunk boundaries depend only
/// on n and the worker count; callers needing bitwise-reproducible reductions should
/// store per-index results and reduce serially.
void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace quc
