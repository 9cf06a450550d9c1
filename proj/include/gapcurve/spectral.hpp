#pragma once

#include <vector>

#include "gapcurve/frame.hpp"
#include "gapcurve/parallel.hpp"
#include "gapcurve/potential.hpp"

namespace gapcurve {

/// Floquet discriminant Delta(lambda) = tr M(lambda).
cplx trace_delta(const Potential& q, cplx lambda);

/// Eigenvalue mu(lambda) = 1/2 (Delta + sign sqrt(Delta^2 - 4)) of M.
/// The two branch signs multiply to 1; at branch points both coincide.
cplx mu(const Potential& q, cplx lambda, int branch_sign = +1);
cplx mu_of_delta(cplx delta, int branch_sign);

/// Eigenvalue of an SU2 monodromy (real lambda) without the sqrt
/// cancellation near mu = +-1: cos from the trace, sin from the
/// trace-free part, so the residual |mu -+ 1| is accurate absolutely.
cplx mu_unitary(const Mat2& M, int branch_sign = +1);

/// One located zero of a - d, as seen from index k.
struct SpectralEntry {
    int k{0};
    cplx lambda;       // zero of a - d
    int mult{1};       // multiplicity of the underlying zero
    cplx z;            // perturbed Fourier coefficient 2 (-1)^k b(lambda_k)
};

/// Zeros lambda_k of a - d near the lattice 2 pi k / T and the perturbed
/// Fourier coefficients z_k.  The central block |k| <= K_central is
/// enumerated by contour counting (zeros sorted by real part, then
/// imaginary part, repeated per multiplicity); tail indices come from
/// Newton iteration seeded at the lattice.
struct SpectralData {
    int K{0};
    int K_central{0};
    double T{0.0};
    double theta{0.0};
    std::vector<SpectralEntry> entries;  // index k + K, k in [-K..K]

    const SpectralEntry& at(int k) const { return entries[static_cast<size_t>(k + K)]; }
    SpectralEntry& at(int k) { return entries[static_cast<size_t>(k + K)]; }

    std::vector<double> abs_z() const;
};

/// Lattice point lambda_{k,0} = 2 pi k / T.
inline double lattice_point(double T, int k) { return 2.0 * std::numbers::pi * k / T; }

/// Default central block size: smallest K with lambda_{K,0} > 2(||q||_L2 + 1).
int default_K_central(const Potential& q);

/// Locate lambda_k for |k| <= K (z not yet filled in).
/// Winding mismatch against 2 K_central + 1 on the big circle is a hard
/// error (under-resolved grid).
SpectralData locate_lambda_k(const Potential& q, int K,
                             ParallelMode mode = ParallelMode::Auto);

/// locate_lambda_k plus z_k = 2 (-1)^k b(lambda_k).
SpectralData perturbed_fourier(const Potential& q, int K,
                               ParallelMode mode = ParallelMode::Auto);

/// Fill z values into already-located spectral data.
void fill_z(const Potential& q, SpectralData& sd, ParallelMode mode = ParallelMode::Auto);

struct DiagnosticsReport {
    int K{0};
    std::vector<double> d;             // d_k = |M(lambda_{k,0}) - M0(lambda_{k,0})|, k in [-K..K]
    std::vector<double> partial_l2;    // sqrt(sum_{|j| <= k} d_j^2), k = 0..K
    double total_l2{0.0};
    std::vector<cplx> ratio_lambda;    // grid points, including complex lambda
    std::vector<double> ratio;         // |M - M0| / |M0| on the grid
};

/// Distance-to-vacuum diagnostics: d_k sequence with partial l2 sums and
/// the ratio |M - M0|/|M0| on a lambda grid (row-sum norm).
DiagnosticsReport asymptotic_diagnostics(const Potential& q, int K,
                                         std::vector<cplx> ratio_grid = {},
                                         ParallelMode mode = ParallelMode::Auto);

struct FiniteGapVerdict {
    bool finite_gap{false};
    int K0{0};                      // all |z_k| < tol for K0 < |k| <= K
    double tol{0.0};                // effective threshold used
    std::vector<int> gap_indices;   // {k : |z_k| >= tol}
};

/// Verdict true iff every |z_k| >= tol index is strictly inside the band.
/// tol_rel/abs defaults: 1e-6 relative to max |z_k| plus a 1e-10 floor.
FiniteGapVerdict is_finite_gap(const SpectralData& sd, double tol_rel = 1e-6,
                               double tol_abs = 1e-10);

}  // namespace gapcurve
