#pragma once

#include <cstddef>
#include <functional>

namespace mixagg {

/// Worker count for internal kernels. Read once from MIXAGG_THREADS
/// (default 1); results never depend on this value.
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Splits [0, n) into contiguous chunks and runs fn(begin, end) on each.
/// Runs inline when one thread is configured or the work is small.
void parallel_for(std::size_t n, std::size_t work_per_item,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace mixagg
