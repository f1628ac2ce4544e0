#pragma once

#include <cstddef>
#include <functional>

namespace ambmerton {

/// Number of worker threads: AMBMERTON_THREADS if set to a positive integer, else the
/// hardware concurrency (at least 1).
unsigned default_thread_count();

/// Runs body(i) for i in [0, n) on up to `threads` threads (0 = default_thread_count()).
/// Indices are handed out dynamically; callers write results by index so output order
/// never depends on scheduling. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace ambmerton
