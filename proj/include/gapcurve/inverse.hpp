#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "gapcurve/geometry.hpp"
#include "gapcurve/parallel.hpp"
#include "gapcurve/potential.hpp"
#include "gapcurve/spectral.hpp"
#include "gapcurve/variation.hpp"

namespace gapcurve {

/// Affine slice through q: candidates share the Fourier coefficients
/// q^(k) for |k| <= N.  Optional closing directions f1, f2 (band-limited,
/// support inside |k| <= N) augment the slice for solve_Psi.
struct SliceSpec {
    int N{0};
    std::optional<Direction> f1;
    std::optional<Direction> f2;
};

/// Tail target (z_k)_{N < |k| <= K_work}; entries absent from the map are
/// targeted to zero.  Closing targets are fixed by eta (+-1).
struct Target {
    int K_work{0};
    std::map<int, cplx> tail;  // k -> desired z_k, indices with N < |k| <= K_work

    cplx desired(int k) const {
        auto it = tail.find(k);
        return it == tail.end() ? cplx(0.0) : it->second;
    }
};

struct SolverConfig {
    int N{2};
    int n_trunc{8};
    double tol{1e-8};
    int max_iter{40};
    int exact_jacobian_every{5};
    int damping_max{8};
    int max_backtracks{3};   // consecutive fully-damped steps before giving up
    int K_margin{12};        // K_work = n_trunc + K_margin unless target says otherwise
    // Evaluate closing residuals on the Richardson-extrapolated monodromy
    // (pairs with reconstruct(refined = true); production solves keep the
    // grid-consistent discrete closing).
    bool refined_closing{false};
    std::uint64_t seed{12345};
};

struct SolveReport {
    explicit SolveReport(Potential start) : q(std::move(start)) {}

    Potential q;
    int iterations{0};
    double residual{0.0};
    std::vector<double> residual_history;
    double closing_residual{0.0};
    std::vector<double> closing_history;
    int eta{+1};
};

/// Truncation target for q: keep z_k for |k| <= n_trunc, zero beyond,
/// over the working band N < |k| <= K_work.
Target truncation_target(const SpectralData& sd, int N, int n_trunc, int K_work);

/// Quasi-Newton inversion of the perturbed Fourier map on the slice:
/// iterate q <- q + inverse_fourier(residual) on the tail band (the
/// ordinary Fourier transform is the approximate inverse Jacobian), with
/// an exact-Jacobian Newton step every exact_jacobian_every iterations.
/// The slice coefficients |k| <= N are preserved exactly.
SolveReport solve_Phi(const Potential& q0, const SliceSpec& slice, const Target& target,
                      const SolverConfig& cfg, ParallelMode mode = ParallelMode::Auto);

/// Search band-limited direction pairs (Fourier modes and seeded random
/// combinations) maximizing the smallest singular value of the 2x2 closing
/// variation matrix.  Refuses potentials of the form a e^{ct} (periodic
/// case: a single Fourier mode), for which the matrix is always singular.
std::pair<Direction, Direction> choose_closing_directions(const Potential& q, Space space,
                                                          std::uint64_t seed = 12345,
                                                          int band = 2,
                                                          double* sigma_min_out = nullptr);

/// Newton on the augmented system (tail residual, closing residual) over
/// slice + span{f1, f2}; eta is read from the start potential and held
/// fixed.  The tail block keeps the Fourier preconditioner, the closing
/// block inverts the 2x2 matrix of closing variations.
SolveReport solve_Psi(const Potential& q0, const SliceSpec& slice, const Target& target,
                      Space space, const SolverConfig& cfg,
                      ParallelMode mode = ParallelMode::Auto);

/// Smallest N on [1, N_max] whose finite-section Jacobian deviates from the
/// Fourier map by less than bound in operator norm (empirical slice choice).
int select_N(const Potential& q, int N_max, double bound = 0.4, int section_halfwidth = 0,
             ParallelMode mode = ParallelMode::Auto);

/// Finite-section operator norm of (jacobian_Phi - Fourier)/T over the
/// band lo <= |k| <= hi (Fourier-mode direction pairs).
double jacobian_fourier_deviation(const Potential& q, int lo, int hi,
                                  ParallelMode mode = ParallelMode::Auto);

}  // namespace gapcurve
