#pragma once

#include <cstdint>
#include <functional>

namespace qmc {

// Worker count: min(QMC_METRICS_THREADS, hardware_concurrency), at least 1.
int worker_thread_count();

// Runs fn(0..count-1) across the worker pool. Tasks must be independent and
// write only to their own slots; scheduling never affects results.
void parallel_for(std::int64_t count, const std::function<void(std::int64_t)>& fn);

}  // namespace qmc
