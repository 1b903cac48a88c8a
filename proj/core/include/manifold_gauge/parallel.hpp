#pragma once

#include <cstddef>
#include <functional>

namespace mgauge {

// Worker count: MANIFOLD_GAUGE_THREADS when set (>=1), else hardware concurrency.
unsigned thread_cap();

// Runs body(i) for i in [0, n) over contiguous row blocks. Each index is
// written by exactly one worker, so results never depend on the schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace mgauge
