#pragma once

#include <functional>

namespace lodadapt {

/// Worker count from LODADAPT_THREADS, else the number of hardware threads.
int default_thread_count();

/// Runs fn(i) for i in [0, n) on up to `threads` threads. Work items must write
/// to disjoint slots; results are therefore independent of the thread count.
/// The exception of the lowest failing index is rethrown.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

} // namespace lodadapt
