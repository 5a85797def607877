#pragma once

#include <cstddef>
#include <functional>

namespace chiralcp {

/// Runs fn(i) for i in [0, n) on up to `workers` threads (workers <= 1 runs
/// inline). Indices are handed out dynamically; the first exception thrown by
/// any fn is rethrown after all threads have joined.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace chiralcp
