#pragma once

#include <functional>

namespace wld {

// Runs fn(i) for i in [0, n).  Work is split into contiguous static blocks,
// one per thread, so the assignment of items to threads is a pure function
// of (n, n_threads).  Combined with per-item derived seeds this makes results
// byte-identical for any thread count.  n_threads <= 1 runs serially on the
// calling thread.  The first exception thrown by any item is rethrown.
void parallel_for(int n, int n_threads, const std::function<void(int)>& fn);

}  // namespace wld
