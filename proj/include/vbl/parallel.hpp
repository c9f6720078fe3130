#pragma once

#include <cstddef>
#include <functional>

namespace vbl {

// Number of worker threads used by parallel_for. 0 selects the hardware
// concurrency. A value of 1 runs everything on the calling thread.
void set_thread_count(int n);
int thread_count();

// Calls body(i) for i in [0, n). Each index is processed exactly once; results
// must be written to per-index slots so the outcome does not depend on the
// schedule. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace vbl
