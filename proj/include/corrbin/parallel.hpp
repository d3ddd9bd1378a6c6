#pragma once

#include <cstddef>
#include <functional>

namespace corrbin {

// Worker count used when a caller passes 0: CORRBIN_THREADS if set, otherwise
// the hardware concurrency.
unsigned default_threads();

// Calls body(i) for i in [0, count) on up to `threads` workers. Work is split
// into contiguous chunks; callers write results into per-index slots so that
// any reduction can run afterwards in index order.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace corrbin
