#include "gapcurve/variation.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gapcurve/error.hpp"

namespace gapcurve {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

Mat2 delta_alpha_of(cplx dq) {
    return {0.0, 0.5 * dq, -0.5 * std::conj(dq), 0.0};
}

void check_grid(const FrameTrajectory& traj, const Direction& dq) {
    if (dq.dq.size() + 1 != traj.frames.size()) {
        fail(ErrorKind::Domain, "variation: direction grid does not match the trajectory");
    }
}

}  // namespace

double Direction::l2_norm(double T) const {
    double acc = 0.0;
    for (const cplx& v : dq) acc += std::norm(v);
    return std::sqrt(acc * T / static_cast<double>(dq.size()));
}

Direction fourier_mode_direction(int n, int m, bool imaginary_unit) {
    Direction d;
    d.dq.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        double ang = -two_pi * m * j / n;
        cplx v(std::cos(ang), std::sin(ang));
        d.dq[static_cast<size_t>(j)] = imaginary_unit ? cplx(0, 1) * v : v;
    }
    return d;
}

Direction cos_mode_direction(int n, int m) {
    Direction d;
    d.dq.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        d.dq[static_cast<size_t>(j)] = std::cos(two_pi * m * j / n);
    }
    return d;
}

Direction sin_mode_direction(int n, int m) {
    Direction d;
    d.dq.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        d.dq[static_cast<size_t>(j)] = std::sin(two_pi * m * j / n);
    }
    return d;
}

Mat2 delta_M(const FrameTrajectory& traj, const Direction& dq) {
    check_grid(traj, dq);
    const int n = static_cast<int>(dq.dq.size());
    const double h = traj.T / n;
    Mat2 acc = Mat2::zero();
    for (int j = 0; j <= n; ++j) {
        double w = (j == 0 || j == n) ? 0.5 * h : h;
        const Mat2& F = traj.frames[static_cast<size_t>(j)];
        Mat2 da = delta_alpha_of(dq.dq[static_cast<size_t>(j % n)]);
        acc += w * (F * da * inverse_unimodular(F));
    }
    return acc * traj.back();
}

Mat2 delta_M(const Potential& q, cplx lambda, const Direction& dq) {
    FrameTrajectory traj = integrate_frame(q, lambda, false);
    return delta_M(traj, dq);
}

Mat2 delta_M_prime(const FrameTrajectory& traj, const Direction& dq) {
    check_grid(traj, dq);
    if (!traj.has_derivative()) {
        fail(ErrorKind::Domain, "delta_M_prime: trajectory lacks dframes");
    }
    const int n = static_cast<int>(dq.dq.size());
    const double h = traj.T / n;
    const Mat2 half_eps = 0.5 * eps;
    // delta F' solves d/dt X = X alpha + (F' delta_alpha + delta F eps/2),
    // so X(T) = [int (F' dalpha + dF eps/2) F^{-1} dt] F(T); the running
    // integral I(t) = int_0^t F dalpha F^{-1} gives dF(t) = I(t) F(t).
    Mat2 I_run = Mat2::zero();
    Mat2 g_prev = Mat2::zero();
    Mat2 acc = Mat2::zero();
    for (int j = 0; j <= n; ++j) {
        const Mat2& F = traj.frames[static_cast<size_t>(j)];
        const Mat2& Fp = traj.dframes[static_cast<size_t>(j)];
        Mat2 Finv = inverse_unimodular(F);
        Mat2 da = delta_alpha_of(dq.dq[static_cast<size_t>(j % n)]);
        Mat2 g = F * da * Finv;
        if (j > 0) I_run += (0.5 * h) * (g_prev + g);
        g_prev = g;
        Mat2 dF = I_run * F;
        double w = (j == 0 || j == n) ? 0.5 * h : h;
        acc += w * ((Fp * da + dF * half_eps) * Finv);
    }
    return acc * traj.back();
}

cplx delta_mu_prime(const FrameTrajectory& traj, const Direction& dq, int branch_sign) {
    const Mat2& M = traj.back();
    const Mat2& Mp = traj.dframes.back();
    Mat2 dM = delta_M(traj, dq);
    Mat2 dMp = delta_M_prime(traj, dq);

    // SU2 split M = c 1 + s U, U^2 = -1; the branch projector is
    // P = 1/2 (1 - i sign U) with mu = c + i sign s.
    cplx c = 0.5 * M.trace();
    Mat2 rest = M - c * Mat2::identity();
    cplx s2 = rest.det();  // = s^2 since det U = 1
    cplx s = std::sqrt(s2);
    if (s.real() < 0.0 || (s.real() == 0.0 && s.imag() < 0.0)) s = -s;
    if (std::abs(s) < 1e-11) {
        fail(ErrorKind::Domain, "delta_mu_prime: mu ~ +-1 at noise level");
    }
    double sg = branch_sign;
    Mat2 U = (1.0 / s) * rest;
    Mat2 P = 0.5 * (Mat2::identity() - cplx(0, sg) * U);

    cplx dc = 0.5 * dM.trace();
    cplx ds = -0.5 * (U * dM).trace();
    Mat2 dU = (1.0 / s) * (dM - dc * Mat2::identity() - ds * U);
    Mat2 dP = -0.5 * cplx(0, sg) * dU;
    return (dP * Mp).trace() + (P * dMp).trace();
}

EigenPair eigen_pair(const Mat2& M, int branch_sign) {
    EigenPair p;
    p.mu = mu_of_delta(M.trace(), branch_sign);
    // v in ker(M - mu): (b, mu - a) or (mu - d, c), whichever is larger.
    if (std::abs(M.b) + std::abs(p.mu - M.a) >= std::abs(M.c) + std::abs(p.mu - M.d)) {
        p.v0 = M.b;
        p.v1 = p.mu - M.a;
    } else {
        p.v0 = p.mu - M.d;
        p.v1 = M.c;
    }
    // w in ker(M^t - mu): (c, mu - a) or (mu - d, b).
    if (std::abs(M.c) + std::abs(p.mu - M.a) >= std::abs(M.b) + std::abs(p.mu - M.d)) {
        p.w0 = M.c;
        p.w1 = p.mu - M.a;
    } else {
        p.w0 = p.mu - M.d;
        p.w1 = M.b;
    }
    p.wtv = p.w0 * p.v0 + p.w1 * p.v1;
    double vn = std::hypot(std::abs(p.v0), std::abs(p.v1));
    double wn = std::hypot(std::abs(p.w0), std::abs(p.w1));
    p.degenerate = (vn == 0.0 || wn == 0.0 || std::abs(p.wtv) < 1e-8 * vn * wn);
    return p;
}

cplx delta_mu(const FrameTrajectory& traj, const Direction& dq, int branch_sign) {
    check_grid(traj, dq);
    EigenPair p = eigen_pair(traj.back(), branch_sign);
    if (p.degenerate) {
        fail(ErrorKind::Domain,
             "delta_mu: eigenvector normalization degenerate (mu ~ +-1); use the delta_M route");
    }
    const int n = static_cast<int>(dq.dq.size());
    const double h = traj.T / n;
    // w(t)^t delta_alpha v(t) with v(t) = F^{-1} v, w(t) = F^t w:
    // = 1/2 ( w(t)_0 dq v(t)_1 - w(t)_1 conj(dq) v(t)_0 ).
    cplx acc = 0.0;
    for (int j = 0; j <= n; ++j) {
        double wgt = (j == 0 || j == n) ? 0.5 * h : h;
        const Mat2& F = traj.frames[static_cast<size_t>(j)];
        Mat2 Finv = inverse_unimodular(F);
        cplx vt0 = Finv.a * p.v0 + Finv.b * p.v1;
        cplx vt1 = Finv.c * p.v0 + Finv.d * p.v1;
        cplx wt0 = F.a * p.w0 + F.c * p.w1;
        cplx wt1 = F.b * p.w0 + F.d * p.w1;
        cplx dqv = dq.dq[static_cast<size_t>(j % n)];
        acc += wgt * 0.5 * (wt0 * dqv * vt1 - wt1 * std::conj(dqv) * vt0);
    }
    return p.mu / p.wtv * acc;
}

cplx delta_mu(const Potential& q, cplx lambda, const Direction& dq, int branch_sign) {
    FrameTrajectory traj = integrate_frame(q, lambda, false);
    return delta_mu(traj, dq, branch_sign);
}

namespace {

struct ZeroVariation {
    cplx dlambda;
    cplx dz;
};

ZeroVariation variation_at_zero(const FrameTrajectory& traj, int k, const Direction& dq) {
    const Mat2& M = traj.back();
    const Mat2& Mp = traj.dframes.back();
    Mat2 dM = delta_M(traj, dq);
    cplx fprime = Mp.a - Mp.d;
    if (std::abs(fprime) == 0.0) {
        fail(ErrorKind::Domain, "delta_lambda_k: (a-d)' vanishes at the zero");
    }
    ZeroVariation out;
    out.dlambda = -(dM.a - dM.d) / fprime;
    double sign = (k % 2 == 0) ? 2.0 : -2.0;
    out.dz = sign * (dM.b + Mp.b * out.dlambda);
    (void)M;
    return out;
}

FrameTrajectory zero_trajectory(const Potential& q, const SpectralEntry& entry) {
    if (entry.mult != 1) {
        fail(ErrorKind::Domain,
             "variation at lambda_k requires a simple zero (multiplicity " +
                 std::to_string(entry.mult) + " at k = " + std::to_string(entry.k) + ")");
    }
    return integrate_frame(q, entry.lambda, true);
}

}  // namespace

cplx delta_lambda_k(const Potential& q, const SpectralEntry& entry, const Direction& dq) {
    FrameTrajectory traj = zero_trajectory(q, entry);
    return variation_at_zero(traj, entry.k, dq).dlambda;
}

cplx delta_z_k(const Potential& q, const SpectralEntry& entry, const Direction& dq) {
    FrameTrajectory traj = zero_trajectory(q, entry);
    return variation_at_zero(traj, entry.k, dq).dz;
}

cplx delta_lambda_k(const Potential& q, int k, const Direction& dq) {
    SpectralData sd = locate_lambda_k(q, std::max(std::abs(k), default_K_central(q)));
    return delta_lambda_k(q, sd.at(k), dq);
}

cplx delta_z_k(const Potential& q, int k, const Direction& dq) {
    SpectralData sd = locate_lambda_k(q, std::max(std::abs(k), default_K_central(q)));
    return delta_z_k(q, sd.at(k), dq);
}

std::vector<std::vector<cplx>> jacobian_Phi(const Potential& q,
                                            const std::vector<int>& index_set,
                                            const std::vector<Direction>& directions,
                                            const SpectralData* located, ParallelMode mode) {
    SpectralData own;
    if (!located) {
        int kmax = default_K_central(q);
        for (int k : index_set) kmax = std::max(kmax, std::abs(k));
        own = locate_lambda_k(q, kmax, mode);
        located = &own;
    }
    const int R = static_cast<int>(index_set.size());
    const int C = static_cast<int>(directions.size());

    std::vector<FrameTrajectory> trajs(static_cast<size_t>(R));
    parallel_for(
        R,
        [&](int r) {
            trajs[static_cast<size_t>(r)] =
                zero_trajectory(q, located->at(index_set[static_cast<size_t>(r)]));
        },
        mode);

    std::vector<std::vector<cplx>> J(static_cast<size_t>(R),
                                     std::vector<cplx>(static_cast<size_t>(C)));
    parallel_for(
        C,
        [&](int c) {
            for (int r = 0; r < R; ++r) {
                J[static_cast<size_t>(r)][static_cast<size_t>(c)] =
                    variation_at_zero(trajs[static_cast<size_t>(r)],
                                      index_set[static_cast<size_t>(r)],
                                      directions[static_cast<size_t>(c)])
                        .dz;
            }
        },
        mode);
    return J;
}

std::vector<double> real_jacobian_blocks(const std::vector<std::vector<cplx>>& J) {
    const int R = static_cast<int>(J.size());
    const int C = R > 0 ? static_cast<int>(J[0].size()) : 0;
    std::vector<double> out(static_cast<size_t>(2 * R * C));
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < C; ++c) {
            out[static_cast<size_t>((2 * r) * C + c)] = J[static_cast<size_t>(r)][static_cast<size_t>(c)].real();
            out[static_cast<size_t>((2 * r + 1) * C + c)] = J[static_cast<size_t>(r)][static_cast<size_t>(c)].imag();
        }
    }
    return out;
}

double operator_norm(const std::vector<double>& mat, int rows, int cols) {
    if (rows <= 0 || cols <= 0) return 0.0;
    std::vector<double> v(static_cast<size_t>(cols));
    for (int c = 0; c < cols; ++c) v[static_cast<size_t>(c)] = 1.0 / (1.0 + c);
    std::vector<double> gv(static_cast<size_t>(rows));
    double sigma = 0.0;
    for (int it = 0; it < 200; ++it) {
        for (int r = 0; r < rows; ++r) {
            double acc = 0.0;
            for (int c = 0; c < cols; ++c) {
                acc += mat[static_cast<size_t>(r * cols + c)] * v[static_cast<size_t>(c)];
            }
            gv[static_cast<size_t>(r)] = acc;
        }
        std::vector<double> gtgv(static_cast<size_t>(cols), 0.0);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                gtgv[static_cast<size_t>(c)] += mat[static_cast<size_t>(r * cols + c)] * gv[static_cast<size_t>(r)];
            }
        }
        double nrm = 0.0;
        for (double x : gtgv) nrm += x * x;
        nrm = std::sqrt(nrm);
        if (nrm == 0.0) return 0.0;
        for (int c = 0; c < cols; ++c) v[static_cast<size_t>(c)] = gtgv[static_cast<size_t>(c)] / nrm;
        double num = 0.0;
        for (double x : gv) num += x * x;
        sigma = std::sqrt(num);
    }
    // one last multiply with the converged direction
    double num = 0.0;
    for (int r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (int c = 0; c < cols; ++c) {
            acc += mat[static_cast<size_t>(r * cols + c)] * v[static_cast<size_t>(c)];
        }
        num += acc * acc;
    }
    sigma = std::sqrt(num);
    return sigma;
}

}  // namespace gapcurve
