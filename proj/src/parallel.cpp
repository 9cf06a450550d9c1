#include "gapcurve/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gapcurve {

int thread_cap() {
#ifdef _OPENMP
    int cap = omp_get_max_threads();
#else
    int cap = 1;
#endif
    if (const char* env = std::getenv("GAPCURVE_THREADS")) {
        int requested = std::atoi(env);
        if (requested >= 1) cap = std::min(cap, requested);
    }
    return std::max(1, cap);
}

void parallel_for(int n, const std::function<void(int)>& body, ParallelMode mode) {
    if (n <= 0) return;
    int threads = (mode == ParallelMode::Serial) ? 1 : thread_cap();
    if (threads <= 1 || n == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
#ifdef _OPENMP
    std::exception_ptr first_error = nullptr;
    std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);
#else
    for (int i = 0; i < n; ++i) body(i);
#endif
}

}  // namespace gapcurve
