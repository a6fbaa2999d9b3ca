#pragma once

#include <cstddef>
#include <functional>

namespace capforge {

// Resolves a requested worker count: 0 means "use CAPFORGE_WORKERS if set,
// else the hardware concurrency". Always returns >= 1.
std::size_t resolve_workers(std::size_t requested);

// Runs body(i) for every i in [0, count) on up to `workers` threads. Work
// items are claimed dynamically; callers must write results into per-item
// slots so the outcome does not depend on scheduling. The first exception
// thrown by any item is rethrown on the calling thread.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace capforge
