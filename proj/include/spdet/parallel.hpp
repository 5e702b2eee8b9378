#pragma once

#include <cstddef>
#include <functional>

namespace spdet {

/// Worker count: SPDET_THREADS if set and positive, else hardware concurrency.
int thread_count();

/// Runs fn(begin, end, worker) over [0, n) split into contiguous chunks, one per
/// worker. Chunk boundaries depend only on n and the worker count.
void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t, int)>& fn);

/// Runs fn(i) for every i in [0, n) with dynamic scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace spdet
