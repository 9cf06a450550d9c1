#pragma once

#include <vector>

#include "gapcurve/frame.hpp"
#include "gapcurve/parallel.hpp"
#include "gapcurve/potential.hpp"
#include "gapcurve/spectral.hpp"

namespace gapcurve {

/// Variation direction delta_q on the sample grid.  The induced
/// delta_alpha = 1/2 (delta_q eps_plus + conj(delta_q) eps_minus) is
/// trace-free with ||delta_alpha||_L2 = ||delta_q||_L2.
struct Direction {
    std::vector<cplx> dq;

    double l2_norm(double T) const;
};

/// Fourier mode t -> exp(-2 pi i m t / T), optionally times i.
Direction fourier_mode_direction(int n, int m, bool imaginary_unit = false);
/// cos(2 pi m t / T) resp. sin(2 pi m t / T) directions.
Direction cos_mode_direction(int n, int m);
Direction sin_mode_direction(int n, int m);

/// delta M = int_0^T F delta_alpha F^{-1} dt * M(lambda), trapezoid on the
/// stored trajectory (the trajectory must carry no derivative requirement).
Mat2 delta_M(const FrameTrajectory& traj, const Direction& dq);
Mat2 delta_M(const Potential& q, cplx lambda, const Direction& dq);

/// Mixed variation delta(dM/dlambda): variation of the lambda-derivative
/// of the monodromy along dq.  Requires a trajectory with dframes.
Mat2 delta_M_prime(const FrameTrajectory& traj, const Direction& dq);

/// Exact variation of mu'(lambda) at real lambda (SU2 monodromy), via the
/// eigenprojector of the mu_unitary branch.  Degenerates when the
/// trace-free part of M is at noise level (mu ~ +-1 exactly).
cplx delta_mu_prime(const FrameTrajectory& traj, const Direction& dq, int branch_sign = +1);

/// Eigenvector pair of M and M^t for the mu branch, with the numerically
/// stable representation chosen per point:
/// v = (b, mu - a) or (mu - d, c); w = (c, mu - a) or (mu - d, b).
struct EigenPair {
    cplx mu;
    cplx v0, v1;
    cplx w0, w1;
    cplx wtv;          // w^t . v
    bool degenerate;   // |w^t v| below threshold (mu ~ +-1 branch point)
};

EigenPair eigen_pair(const Mat2& M, int branch_sign);

/// delta mu = mu / (w^t v) int_0^T w(t)^t delta_alpha v(t) dt with
/// v(t) = F^{-1} v, w(t) = F^t w.  Errors out when the eigenvector
/// normalization degenerates (mu ~ +-1 with M far from +-1).
cplx delta_mu(const FrameTrajectory& traj, const Direction& dq, int branch_sign = +1);
cplx delta_mu(const Potential& q, cplx lambda, const Direction& dq, int branch_sign = +1);

/// delta lambda_k = -delta(a-d)(lambda_k) / (a-d)'(lambda_k); requires a
/// simple zero.
cplx delta_lambda_k(const Potential& q, const SpectralEntry& entry, const Direction& dq);

/// delta z_k = 2 (-1)^k (delta b(lambda_k) + b'(lambda_k) delta lambda_k).
cplx delta_z_k(const Potential& q, const SpectralEntry& entry, const Direction& dq);

/// Convenience overloads that locate lambda_k first.
cplx delta_lambda_k(const Potential& q, int k, const Direction& dq);
cplx delta_z_k(const Potential& q, int k, const Direction& dq);

/// Matrix of delta z_k over a direction basis; rows indexed by index_set,
/// columns by directions.  Columns are computed in parallel.
std::vector<std::vector<cplx>> jacobian_Phi(const Potential& q,
                                            const std::vector<int>& index_set,
                                            const std::vector<Direction>& directions,
                                            const SpectralData* located = nullptr,
                                            ParallelMode mode = ParallelMode::Auto);

/// Real 2x2-block representation of the complex row/column data of a
/// real-linear map (dq -> dz involves conj dq), as a dense row-major
/// matrix of size (2 rows per index) x (2 cols per direction pair).
/// Directions must come in (d, i*d) pairs for this packing.
std::vector<double> real_jacobian_blocks(const std::vector<std::vector<cplx>>& J);

/// Largest singular value by power iteration on G^t G (deterministic start).
double operator_norm(const std::vector<double>& mat, int rows, int cols);

}  // namespace gapcurve
