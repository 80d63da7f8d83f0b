#pragma once

#include <cstddef>
#include <functional>

namespace gwm {

/// Worker count: GWM_THREADS env var caps parallelism, 0 or unset = hardware
/// concurrency. Always at least 1.
int thread_count();

/// Runs fn(i) for i in [0, n). Tasks must write only to their own slots; the
/// call returns after all tasks finish, so callers can reduce in a fixed order
/// afterwards. Observable results are identical for any worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace gwm
