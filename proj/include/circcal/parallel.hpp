#pragma once

#include <cstddef>
#include <functional>

namespace circcal {

/// Number of hardware threads, never less than 1.
int DefaultWorkerCount();

/// Runs body(i) for i in [0, count) on up to `workers` threads.
/// Work is split into contiguous static blocks so the item-to-thread
/// assignment never influences results stored by index. The first exception
/// thrown by any body is rethrown on the calling thread.
void ParallelFor(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

}  // namespace circcal
