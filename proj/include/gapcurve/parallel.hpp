#pragma once

#include <exception>
#include <functional>

namespace gapcurve {

enum class ParallelMode {
    Auto,    // OpenMP with the GAPCURVE_THREADS cap
    Serial,  // reference path, kept for testing and benchmarks
};

/// Thread cap: min(GAPCURVE_THREADS, omp_get_max_threads()); 1 without OpenMP.
int thread_cap();

/// Map body(i) over i in [0, n).  Results must be written to disjoint
/// slots; any reduction is done serially by the caller so that outputs do
/// not depend on the schedule.  The first exception thrown by a body is
/// rethrown after the loop completes.
void parallel_for(int n, const std::function<void(int)>& body,
                  ParallelMode mode = ParallelMode::Auto);

}  // namespace gapcurve
