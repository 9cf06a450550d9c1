// Timing comparison of the serial reference path against the OpenMP
// parallel maps, for the monodromy sweep and the Jacobian assembly.

#include <chrono>
#include <cstdio>
#include <vector>

#include "gapcurve/inverse.hpp"
#include "gapcurve/parallel.hpp"
#include "gapcurve/potential.hpp"
#include "gapcurve/spectral.hpp"
#include "gapcurve/variation.hpp"

using namespace gapcurve;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Potential bench_potential(int n) {
    double T = 2.0 * std::numbers::pi;
    std::vector<cplx> s(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        double t = T * j / n;
        s[static_cast<size_t>(j)] =
            cplx(0.3 * std::cos(t) + 0.1 * std::cos(3.0 * t), 0.2 * std::sin(2.0 * t));
    }
    return Potential(std::move(s), T);
}

}  // namespace

int main(int argc, char** argv) {
    int n = (argc > 1) ? std::atoi(argv[1]) : 512;
    int K = (argc > 2) ? std::atoi(argv[2]) : 24;
    Potential q = bench_potential(n);
    std::printf("grid n = %d, band K = %d, threads = %d\n", n, K, thread_cap());

    for (ParallelMode mode : {ParallelMode::Serial, ParallelMode::Auto}) {
        const char* name = (mode == ParallelMode::Serial) ? "serial " : "openmp ";
        auto t0 = Clock::now();
        SpectralData sd = perturbed_fourier(q, K, mode);
        double t_spec = seconds_since(t0);

        t0 = Clock::now();
        DiagnosticsReport rep = asymptotic_diagnostics(q, K, {}, mode);
        double t_diag = seconds_since(t0);

        std::vector<int> idx;
        for (int k = 3; k <= 10; ++k) {
            idx.push_back(k);
            idx.push_back(-k);
        }
        std::vector<Direction> dirs;
        for (int k : idx) {
            dirs.push_back(fourier_mode_direction(n, k, false));
            dirs.push_back(fourier_mode_direction(n, k, true));
        }
        t0 = Clock::now();
        auto J = jacobian_Phi(q, idx, dirs, &sd, mode);
        double t_jac = seconds_since(t0);

        std::printf("%s  spectrum %.3fs  diagnostics %.3fs  jacobian %.3fs  (checksum %.6f)\n",
                    name, t_spec, t_diag, t_jac,
                    std::abs(J[0][0]) + rep.total_l2 + std::abs(sd.at(1).lambda));
    }
    return 0;
}
