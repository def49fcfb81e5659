#pragma once

#include <cstddef>
#include <functional>

namespace poresim {

// Worker count: PORESIM_THREADS if set and > 0, otherwise hardware
// concurrency (at least 1).
unsigned worker_count();

// Runs body(i) for i in [0, n) over contiguous chunks on worker_count()
// threads. Bodies must write disjoint outputs; results then do not depend on
// scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace poresim
