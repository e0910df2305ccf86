#pragma once

#include <functional>

namespace daf {

/// Worker count for parallel sections: `requested` if positive, otherwise
/// the DAF_THREADS environment variable, otherwise hardware concurrency.
int worker_count(int requested = 0);

/// Runs fn(i) for i in [0, n) across `workers` threads. Work is split into
/// contiguous index ranges; results must not depend on execution order.
void parallel_for(long n, int workers, const std::function<void(long)>& fn);

}  // namespace daf
