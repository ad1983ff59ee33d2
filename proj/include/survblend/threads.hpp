#pragma once

#include <cstddef>
#include <functional>

namespace survblend {

/// Worker count: SURVBLEND_THREADS when set (>= 1), otherwise the
/// hardware concurrency.
int worker_count();

/// Splits [0, n) into contiguous chunks, one worker thread per chunk.
/// Callers own determinism by writing results through the index; the
/// first worker exception is rethrown after all threads join.
void parallel_chunks(std::size_t n, int threads,
                     const std::function<void(std::size_t begin, std::size_t end)>& fn);

} // namespace survblend
