#pragma once

#include <cstddef>
#include <functional>

namespace lsmcf {

/// Worker count for fan-out: LSMCF_THREADS if set to a positive integer,
/// otherwise the hardware concurrency (at least 1).
int thread_limit();

/// Runs fn(i) for i in [0, count) on up to thread_limit() threads. Work is
/// handed out by index, so results written per index do not depend on the
/// thread count. The first exception thrown by any call is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace lsmcf
