#pragma once

#include <cstddef>
#include <functional>

namespace boclab {

// Runs fn(0..n-1) on up to `threads` workers. Tasks must write only to their
// own slot, which makes the result independent of the thread count. The
// exception of the lowest failing index is rethrown after all workers stop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace boclab
