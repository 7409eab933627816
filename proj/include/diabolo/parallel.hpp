#pragma once

#include <cstddef>
#include <functional>

namespace diabolo {

// Worker count: hardware concurrency, capped by the DIABOLO_THREADS
// environment variable when set.
int worker_count();

// Runs fn(i) for every i in [0, n). Partitioning is static, so each index is
// executed exactly once no matter how many workers run; callers get
// deterministic results by writing to per-index slots and reducing after the
// call returns. Exceptions thrown by fn are rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace diabolo
