#pragma once

#include <functional>

namespace bcr {

int hardware_worker_count();

// Run task(i) for every i in [0, count) across up to `workers` threads.
// Tasks must write results into caller-owned slots indexed by i so that any
// reduction over them is independent of scheduling order. The first thrown
// exception is rethrown on the calling thread after all workers finish.
void parallel_for(int count, int workers, const std::function<void(int)>& task);

}  // namespace bcr
