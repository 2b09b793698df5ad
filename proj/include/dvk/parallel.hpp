#pragma once

#include <cstddef>
#include <functional>

namespace dvk {

/// Worker cap. Defaults to the DVK_THREADS environment variable, else the
/// number of hardware threads.
int thread_count();
void set_thread_count(int threads);

/// Runs fn(i) for every i in [0, n). Work is split into contiguous static
/// ranges, so callers that write results to slot i and reduce afterwards in
/// index order get the same answer for every thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace dvk
