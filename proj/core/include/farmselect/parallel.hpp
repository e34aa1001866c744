#pragma once

#include <farmselect/linalg.hpp>

#include <functional>

namespace farmselect {

/// FARMSELECT_THREADS when set to a positive integer, otherwise the hardware concurrency (at least 1).
Index default_thread_count();

/**
 * Calls body(i) for every i in [0, count) on up to `threads` worker threads
 * (0 means default_thread_count()). Each index runs exactly once; the first
 * exception thrown by a body is rethrown after all workers finish.
 */
void parallel_for(Index count, Index threads, const std::function<void(Index)>& body);

} // namespace farmselect
