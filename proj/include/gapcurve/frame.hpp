#pragma once

#include <optional>
#include <vector>

#include "gapcurve/algebra.hpp"
#include "gapcurve/potential.hpp"

namespace gapcurve {

/// alpha^q(t_j, lambda) = 1/2 (lambda eps + q_j eps_plus + conj(q_j) eps_minus).
Mat2 alpha_at(const Potential& q, int j, cplx lambda);
Mat2 alpha_of(cplx qval, cplx lambda);

/// Sampled extended frame F(t, lambda) for one lambda; F_0 = I, det F_j = 1.
/// For real lambda the frames are unitary (reality condition).
struct FrameTrajectory {
    cplx lambda;
    double T{0.0};
    std::vector<double> times;          // n+1 nodes, 0 .. T
    std::vector<Mat2> frames;           // F at the nodes
    std::vector<Mat2> dframes;          // dF/dlambda, empty unless requested

    const Mat2& front() const { return frames.front(); }
    const Mat2& back() const { return frames.back(); }
    bool has_derivative() const { return !dframes.empty(); }
};

/// Monodromy M(lambda) = F(T, lambda) with entries (a b / c d) and its
/// lambda-derivative.
struct Monodromy {
    cplx lambda;
    Mat2 M;
    Mat2 Mprime;

    cplx a() const { return M.a; }
    cplx b() const { return M.b; }
    cplx c() const { return M.c; }
    cplx d() const { return M.d; }
};

/// Largest |lambda| the grid resolves (~6 cells per oscillation).
inline double lambda_resolution_bound(const Potential& q) {
    return 10.0 * q.n() / q.T();
}

/// Integrate dF/dt = F alpha, F(0) = I over one period with the
/// midpoint-exponential scheme: F_{j+1} = F_j exp(h alpha(t_{j+1/2})).
/// The scheme preserves det = 1 and SU2 reality per step and is exact for
/// constant potentials.  When with_derivative is set, dF/dlambda is
/// co-integrated with the exact per-cell variation-of-constants formula.
/// Refuses |lambda| beyond the resolution bound.
FrameTrajectory integrate_frame(const Potential& q, cplx lambda, bool with_derivative = false);

/// Monodromy and its lambda-derivative without storing the trajectory.
Monodromy monodromy(const Potential& q, cplx lambda);

/// Vacuum closed forms: F_0(t, lambda) = exp(lambda t eps / 2).
Mat2 vacuum_frame(double t, cplx lambda);
Mat2 vacuum_monodromy(double T, cplx lambda);

struct PicardOptions {
    int n_terms{12};
    double tol{1e-10};  // required bound on the remainder (1/n!) (int ||alpha||)^n
};

/// Truncated iterated-integral (Picard) series for F(T, lambda),
/// evaluated by nested trapezoid quadrature on the sample grid.
/// Independent of the midpoint-exponential scheme; serves as an oracle.
/// Fails if the remainder bound cannot be met within n_terms.
Mat2 picard_series(const Potential& q, cplx lambda, const PicardOptions& opt = {});

/// Remainder bound (1/(m+1)!) (int_0^T ||alpha||)^(m+1) after m terms.
double picard_remainder_bound(const Potential& q, cplx lambda, int m);

}  // namespace gapcurve
