#include "gapcurve/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <cstdio>
#include <cstdlib>

#include "gapcurve/error.hpp"
#include "gapcurve/frame.hpp"

namespace gapcurve {

namespace {

std::vector<int> controlled_indices(int N, int K_work) {
    std::vector<int> idx;
    for (int k = N + 1; k <= K_work; ++k) {
        idx.push_back(k);
        idx.push_back(-k);
    }
    return idx;
}

void check_simple_zeros(const SpectralData& sd, int N) {
    for (const auto& e : sd.entries) {
        if (std::abs(e.k) > N && e.mult != 1) {
            fail(ErrorKind::Divergence,
                 "multiple central zero encountered at k = " + std::to_string(e.k) +
                     "; index assignment is not comparable");
        }
    }
}

double tail_residual_norm(const SpectralData& sd, const Target& target,
                          std::vector<cplx>* out, const std::vector<int>& idx) {
    double acc = 0.0;
    if (out) out->resize(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
        cplx r = target.desired(idx[i]) - sd.at(idx[i]).z;
        if (out) (*out)[i] = r;
        acc += std::norm(r);
    }
    return std::sqrt(acc);
}

Potential apply_tail_update(const Potential& q, const std::vector<int>& idx,
                            const std::vector<cplx>& coeff, double scale) {
    // q + scale * (1/T) sum_k coeff_k e^{-2 pi i k t / T}; only tail modes,
    // so the slice coefficients are untouched.
    const int n = q.n();
    std::vector<cplx> samples = q.samples();
    const double two_pi = 2.0 * std::numbers::pi;
    for (size_t i = 0; i < idx.size(); ++i) {
        cplx c = scale / q.T() * coeff[i];
        if (c == cplx(0.0)) continue;
        for (int j = 0; j < n; ++j) {
            double ang = -two_pi * idx[i] * j / n;
            samples[static_cast<size_t>(j)] += c * cplx(std::cos(ang), std::sin(ang));
        }
    }
    return Potential(std::move(samples), q.T(), q.theta());
}

Potential add_direction(const Potential& q, const Direction& d, double s) {
    std::vector<cplx> samples = q.samples();
    for (size_t j = 0; j < samples.size(); ++j) samples[j] += s * d.dq[j];
    return Potential(std::move(samples), q.T(), q.theta());
}

// Solve a dense real system by Gauss elimination with partial pivoting.
std::vector<double> solve_dense(std::vector<double> A, std::vector<double> b, int n) {
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r) {
            if (std::abs(A[static_cast<size_t>(r * n + col)]) >
                std::abs(A[static_cast<size_t>(piv * n + col)])) {
                piv = r;
            }
        }
        if (std::abs(A[static_cast<size_t>(piv * n + col)]) < 1e-14) {
            fail(ErrorKind::Divergence, "exact Jacobian step: singular system");
        }
        if (piv != col) {
            for (int c = 0; c < n; ++c) {
                std::swap(A[static_cast<size_t>(col * n + c)], A[static_cast<size_t>(piv * n + c)]);
            }
            std::swap(b[static_cast<size_t>(col)], b[static_cast<size_t>(piv)]);
        }
        double d = A[static_cast<size_t>(col * n + col)];
        for (int r = col + 1; r < n; ++r) {
            double f = A[static_cast<size_t>(r * n + col)] / d;
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c) {
                A[static_cast<size_t>(r * n + c)] -= f * A[static_cast<size_t>(col * n + c)];
            }
            b[static_cast<size_t>(r)] -= f * b[static_cast<size_t>(col)];
        }
    }
    std::vector<double> x(static_cast<size_t>(n));
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[static_cast<size_t>(r)];
        for (int c = r + 1; c < n; ++c) {
            acc -= A[static_cast<size_t>(r * n + c)] * x[static_cast<size_t>(c)];
        }
        x[static_cast<size_t>(r)] = acc / A[static_cast<size_t>(r * n + r)];
    }
    return x;
}

// Tail update from an exact-Jacobian Newton step in the Fourier-mode basis.
std::vector<cplx> exact_jacobian_coeffs(const Potential& q, const SpectralData& sd,
                                        const std::vector<int>& idx,
                                        const std::vector<cplx>& residual, ParallelMode mode) {
    const int R = static_cast<int>(idx.size());
    std::vector<Direction> dirs;
    dirs.reserve(static_cast<size_t>(2 * R));
    for (int i = 0; i < R; ++i) {
        dirs.push_back(fourier_mode_direction(q.n(), idx[static_cast<size_t>(i)], false));
        dirs.push_back(fourier_mode_direction(q.n(), idx[static_cast<size_t>(i)], true));
    }
    auto J = jacobian_Phi(q, idx, dirs, &sd, mode);
    // real system: 2R equations (Re, Im of each residual), 2R unknowns
    const int m = 2 * R;
    std::vector<double> A(static_cast<size_t>(m * m));
    std::vector<double> b(static_cast<size_t>(m));
    for (int r = 0; r < R; ++r) {
        b[static_cast<size_t>(2 * r)] = residual[static_cast<size_t>(r)].real();
        b[static_cast<size_t>(2 * r + 1)] = residual[static_cast<size_t>(r)].imag();
        for (int c = 0; c < m; ++c) {
            A[static_cast<size_t>((2 * r) * m + c)] = J[static_cast<size_t>(r)][static_cast<size_t>(c)].real();
            A[static_cast<size_t>((2 * r + 1) * m + c)] = J[static_cast<size_t>(r)][static_cast<size_t>(c)].imag();
        }
    }
    std::vector<double> x = solve_dense(std::move(A), std::move(b), m);
    // repack: the update in mode k is (x_{2i} + i x_{2i+1}) * T (the tail
    // update helper divides by T again)
    std::vector<cplx> coeff(static_cast<size_t>(R));
    for (int i = 0; i < R; ++i) {
        coeff[static_cast<size_t>(i)] = cplx(x[static_cast<size_t>(2 * i)], x[static_cast<size_t>(2 * i + 1)]) * q.T();
    }
    return coeff;
}

// Closing residual in matrix form: su2 components of M - eta 1 at the
// distinguished lambdas (plus the components of M' M^{-1} for R3).  These
// are smooth entry functions of the potential with no branch fold at the
// solution, and vanish exactly when the mu-form residuals reported by
// check_closing do (SU2 monodromies are semisimple).
struct ClosingRes {
    std::array<double, 6> r{};
    int dim{0};
    double norm() const {
        double acc = 0.0;
        for (int i = 0; i < dim; ++i) acc += r[static_cast<size_t>(i)] * r[static_cast<size_t>(i)];
        return std::sqrt(acc);
    }
};

void put_su2_part(const Mat2& X, std::array<double, 6>& out, int offset) {
    // components of the trace-free part w.r.t. the su2 basis
    cplx c = 0.5 * X.trace();
    Mat2 rest = X - c * Mat2::identity();
    out[static_cast<size_t>(offset + 0)] = rest.a.imag();
    out[static_cast<size_t>(offset + 1)] = rest.b.real();
    out[static_cast<size_t>(offset + 2)] = rest.b.imag();
}

Potential upsample2(const Potential& q) {
    return inverse_fourier(fourier(q, q.n() / 2 - 1), 2 * q.n(), q.T(), q.theta());
}

Direction upsample2(const Direction& d, double T) {
    const int n = static_cast<int>(d.dq.size());
    std::vector<cplx> X = fft_forward(d.dq);
    std::vector<cplx> X2(static_cast<size_t>(2 * n), cplx(0.0));
    for (int m = 0; m < n; ++m) {
        int k = (m <= n / 2) ? m : m - n;
        int m2 = (k % (2 * n) + 2 * n) % (2 * n);
        X2[static_cast<size_t>(m2)] = 2.0 * X[static_cast<size_t>(m)];
    }
    Direction out;
    out.dq = fft_inverse(X2);
    (void)T;
    return out;
}

// Monodromy pair (M, M') at one closing lambda, optionally Richardson-
// extrapolated against the band-limited grid halving.
struct ClosingMono {
    Mat2 M;
    Mat2 Mp;
};

ClosingMono closing_mono(const Potential& q, const Potential* qfine, cplx lambda) {
    Monodromy m = monodromy(q, lambda);
    ClosingMono out{m.M, m.Mprime};
    if (qfine) {
        Monodromy mf = monodromy(*qfine, lambda);
        out.M = (1.0 / 3.0) * (4.0 * mf.M - m.M);
        out.Mp = (1.0 / 3.0) * (4.0 * mf.Mprime - m.Mprime);
    }
    return out;
}

ClosingRes eval_closing(const Potential& q, Space space, int eta, bool refined) {
    ClosingRes c;
    double e = eta;
    std::optional<Potential> qfine;
    if (refined) qfine = upsample2(q);
    const Potential* qf = qfine ? &*qfine : nullptr;
    if (space == Space::S3) {
        ClosingMono m1 = closing_mono(q, qf, 1.0 + q.theta());
        ClosingMono m2 = closing_mono(q, qf, -1.0 + q.theta());
        put_su2_part(m1.M - e * Mat2::identity(), c.r, 0);
        put_su2_part(m2.M - e * Mat2::identity(), c.r, 3);
        c.dim = 6;
    } else {
        ClosingMono m = closing_mono(q, qf, q.theta());
        put_su2_part(m.M - e * Mat2::identity(), c.r, 0);
        put_su2_part(m.Mp * inverse(m.M), c.r, 3);
        c.dim = 6;
    }
    return c;
}

// Trajectories at the closing lambdas, reused across direction columns;
// refined mode carries the grid-halved counterparts.
struct ClosingFrames {
    FrameTrajectory a;  // S3: lambda = 1+theta; R3: lambda = theta (with dframes)
    FrameTrajectory b;  // S3: lambda = -1+theta; R3: unused
    std::optional<Potential> qfine;
    FrameTrajectory fa, fb;
};

ClosingFrames closing_frames(const Potential& q, Space space, bool refined) {
    ClosingFrames f;
    if (refined) f.qfine = upsample2(q);
    if (space == Space::S3) {
        f.a = integrate_frame(q, 1.0 + q.theta(), false);
        f.b = integrate_frame(q, -1.0 + q.theta(), false);
        if (refined) {
            f.fa = integrate_frame(*f.qfine, 1.0 + q.theta(), false);
            f.fb = integrate_frame(*f.qfine, -1.0 + q.theta(), false);
        }
    } else {
        f.a = integrate_frame(q, q.theta(), true);
        if (refined) f.fa = integrate_frame(*f.qfine, q.theta(), true);
    }
    return f;
}

void r3_variation_parts(const FrameTrajectory& traj, const Direction& d, Mat2& dM, Mat2& dRot) {
    const Mat2& M = traj.back();
    const Mat2& Mp = traj.dframes.back();
    Mat2 Minv = inverse_unimodular(M);
    dM = delta_M(traj, d);
    Mat2 dMp = delta_M_prime(traj, d);
    // d(M' M^{-1}) = dM' M^{-1} - M' M^{-1} dM M^{-1}
    dRot = dMp * Minv - Mp * Minv * dM * Minv;
}

ClosingRes closing_variation(const ClosingFrames& f, Space space, const Direction& d) {
    ClosingRes v;
    const bool refined = f.qfine.has_value();
    Direction dfine;
    if (refined) dfine = upsample2(d, f.a.T);
    if (space == Space::S3) {
        Mat2 da = delta_M(f.a, d);
        Mat2 db = delta_M(f.b, d);
        if (refined) {
            da = (1.0 / 3.0) * (4.0 * delta_M(f.fa, dfine) - da);
            db = (1.0 / 3.0) * (4.0 * delta_M(f.fb, dfine) - db);
        }
        put_su2_part(da, v.r, 0);
        put_su2_part(db, v.r, 3);
        v.dim = 6;
    } else {
        Mat2 dM, dRot;
        r3_variation_parts(f.a, d, dM, dRot);
        if (refined) {
            Mat2 dMf, dRotf;
            r3_variation_parts(f.fa, dfine, dMf, dRotf);
            dM = (1.0 / 3.0) * (4.0 * dMf - dM);
            dRot = (1.0 / 3.0) * (4.0 * dRotf - dRot);
        }
        put_su2_part(dM, v.r, 0);
        put_su2_part(dRot, v.r, 3);
        v.dim = 6;
    }
    return v;
}

double sigma_min_2x2(cplx a, cplx b, cplx c, cplx d) {
    // singular values of [[a,b],[c,d]] from A* A
    double t = std::norm(a) + std::norm(b) + std::norm(c) + std::norm(d);
    double det2 = std::norm(a * d - b * c);
    double disc = std::sqrt(std::max(0.0, t * t - 4.0 * det2));
    double smin2 = (t + disc > 0.0) ? 2.0 * det2 / (t + disc) : 0.0;
    return std::sqrt(smin2);
}

bool is_single_fourier_mode(const Potential& q) {
    FourierSeq c = fourier(q, q.n() / 2 - 1);
    double scale = 0.0;
    for (const cplx& v : c.coeff) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return true;  // vacuum (a = 0)
    int above = 0;
    for (const cplx& v : c.coeff) {
        if (std::abs(v) > 1e-8 * scale) ++above;
    }
    return above <= 1;
}

}  // namespace

Target truncation_target(const SpectralData& sd, int N, int n_trunc, int K_work) {
    Target t;
    t.K_work = K_work;
    for (int k = N + 1; k <= K_work; ++k) {
        for (int s : {+1, -1}) {
            int kk = s * k;
            if (std::abs(kk) <= n_trunc) t.tail[kk] = sd.at(kk).z;
        }
    }
    return t;
}

SolveReport solve_Phi(const Potential& q0, const SliceSpec& slice, const Target& target,
                      const SolverConfig& cfg, ParallelMode mode) {
    const int N = slice.N;
    const int K_work = target.K_work > 0 ? target.K_work : cfg.n_trunc + cfg.K_margin;
    const std::vector<int> idx = controlled_indices(N, K_work);

    SolveReport rep(q0);
    Potential q = q0;
    const double norm_cap = 3.0 * (q0.l2_norm() + 1.0);  // local-neighborhood trust bound
    SpectralData sd = perturbed_fourier(q, K_work, mode);
    check_simple_zeros(sd, N);
    std::vector<cplx> residual;
    double rnorm = tail_residual_norm(sd, target, &residual, idx);
    rep.residual_history.push_back(rnorm);

    int bad_steps = 0;
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        if (rnorm < cfg.tol) break;

        std::vector<cplx> coeff;
        bool exact = (cfg.exact_jacobian_every > 0) && (iter > 0) &&
                     ((iter + 1) % cfg.exact_jacobian_every == 0);
        if (exact) {
            coeff = exact_jacobian_coeffs(q, sd, idx, residual, mode);
        } else {
            coeff = residual;  // Fourier preconditioner: delta q^ = residual
        }

        double best_norm = std::numeric_limits<double>::infinity();
        Potential best_q = q;
        SpectralData best_sd = sd;
        std::vector<cplx> best_res = residual;
        double scale = 1.0;
        bool improved = false;
        for (int halving = 0; halving <= cfg.damping_max; ++halving, scale *= 0.5) {
            try {
                Potential qt = apply_tail_update(q, idx, coeff, scale);
                if (qt.l2_norm() > norm_cap) continue;  // outside the local neighborhood
                SpectralData sdt = perturbed_fourier(qt, K_work, mode);
                check_simple_zeros(sdt, N);
                std::vector<cplx> rest;
                double rt = tail_residual_norm(sdt, target, &rest, idx);
                if (rt < best_norm) {
                    best_norm = rt;
                    best_q = qt;
                    best_sd = sdt;
                    best_res = rest;
                }
                if (rt < rnorm) {
                    improved = true;
                    break;
                }
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::Divergence) throw;
                continue;  // damped step left the resolvable region; halve
            }
        }
        if (!std::isfinite(best_norm)) {
            fail(ErrorKind::Divergence,
                 "solve_Phi: no evaluable step; target outside local neighborhood");
        }
        q = best_q;
        sd = best_sd;
        residual = best_res;
        rnorm = best_norm;
        rep.residual_history.push_back(rnorm);
        ++rep.iterations;
        if (improved) {
            bad_steps = 0;
        } else if (++bad_steps >= cfg.max_backtracks) {
            fail(ErrorKind::Divergence,
                 "solve_Phi: residual grew for " + std::to_string(bad_steps) +
                     " damped steps; target outside local neighborhood; increase n or reduce "
                     "perturbation");
        }
    }
    if (rnorm >= cfg.tol) {
        fail(ErrorKind::Divergence,
             "solve_Phi: residual " + std::to_string(rnorm) + " above tolerance after " +
                 std::to_string(rep.iterations) + " iterations");
    }
    rep.q = std::move(q);
    rep.residual = rnorm;
    return rep;
}

std::pair<Direction, Direction> choose_closing_directions(const Potential& q, Space space,
                                                          std::uint64_t seed, int band,
                                                          double* sigma_min_out) {
    if (is_single_fourier_mode(q)) {
        fail(ErrorKind::Domain,
             "choose_closing_directions: potential is of the excluded form a e^{ct} "
             "(single Fourier mode)");
    }
    const int n = q.n();
    std::vector<Direction> cands;
    for (int m = -band; m <= band; ++m) {
        cands.push_back(fourier_mode_direction(n, m, false));
        cands.push_back(fourier_mode_direction(n, m, true));
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int r = 0; r < 4; ++r) {
        Direction d;
        d.dq.assign(static_cast<size_t>(n), cplx(0.0));
        for (int m = -band; m <= band; ++m) {
            cplx c(unif(rng), unif(rng));
            Direction mode = fourier_mode_direction(n, m, false);
            for (int j = 0; j < n; ++j) d.dq[static_cast<size_t>(j)] += c * mode.dq[static_cast<size_t>(j)];
        }
        cands.push_back(std::move(d));
    }
    // normalize to unit L2 so sigma_min comparisons are scale-free
    for (Direction& d : cands) {
        double s = d.l2_norm(q.T());
        for (cplx& v : d.dq) v *= 1.0 / s;
    }

    // column of closing variations per candidate
    std::vector<cplx> col1(cands.size()), col2(cands.size());
    if (space == Space::S3) {
        FrameTrajectory t1 = integrate_frame(q, 1.0 + q.theta(), false);
        FrameTrajectory t2 = integrate_frame(q, -1.0 + q.theta(), false);
        for (size_t i = 0; i < cands.size(); ++i) {
            col1[i] = delta_mu(t1, cands[i], +1);
            col2[i] = delta_mu(t2, cands[i], +1);
        }
    } else {
        const double h = 1e-3;
        FrameTrajectory t0 = integrate_frame(q, q.theta(), false);
        FrameTrajectory tp = integrate_frame(q, q.theta() + h, false);
        FrameTrajectory tm = integrate_frame(q, q.theta() - h, false);
        for (size_t i = 0; i < cands.size(); ++i) {
            col1[i] = delta_mu(t0, cands[i], +1);
            col2[i] = (delta_mu(tp, cands[i], +1) - delta_mu(tm, cands[i], +1)) / (2.0 * h);
        }
    }

    double best = -1.0;
    size_t bi = 0, bj = 1;
    for (size_t i = 0; i < cands.size(); ++i) {
        for (size_t j = i + 1; j < cands.size(); ++j) {
            double s = sigma_min_2x2(col1[i], col1[j], col2[i], col2[j]);
            if (s > best) {
                best = s;
                bi = i;
                bj = j;
            }
        }
    }
    if (sigma_min_out) *sigma_min_out = best;
    if (best < 1e-10) {
        fail(ErrorKind::Domain,
             "choose_closing_directions: all candidate pairs are rank-deficient (best sigma_min " +
                 std::to_string(best) + ")");
    }
    return {cands[bi], cands[bj]};
}

SolveReport solve_Psi(const Potential& q0, const SliceSpec& slice, const Target& target,
                      Space space, const SolverConfig& cfg, ParallelMode mode) {
    if (!slice.f1 || !slice.f2) {
        fail(ErrorKind::Domain, "solve_Psi: closing directions f1, f2 are required");
    }
    const int N = slice.N;
    const int K_work = target.K_work > 0 ? target.K_work : cfg.n_trunc + cfg.K_margin;
    const std::vector<int> idx = controlled_indices(N, K_work);
    const Direction& f1 = *slice.f1;
    const Direction& f2 = *slice.f2;

    SolveReport rep(q0);
    Potential q = q0;
    const double norm_cap = 3.0 * (q0.l2_norm() + 1.0);
    const bool closing_only = idx.empty();  // no tail conditions: pure closing Newton

    // Direction set for the closing block.  The eigenvalue angle folds at
    // M = +-1, so the solver works on the matrix-form residual instead;
    // reaching its full axis structure takes a few more band-limited
    // directions than the chosen pair.
    std::vector<Direction> fs = {f1, f2};
    for (int m = -2; m <= 2; ++m) {
        fs.push_back(fourier_mode_direction(q.n(), m, false));
        fs.push_back(fourier_mode_direction(q.n(), m, true));
    }
    const int nf = static_cast<int>(fs.size());

    // eta is read from the start potential and held fixed.
    {
        cplx mu_ref = (space == Space::S3) ? mu_unitary(monodromy(q, 1.0 + q.theta()).M, +1)
                                           : mu_unitary(monodromy(q, q.theta()).M, +1);
        rep.eta = (std::abs(mu_ref - 1.0) <= std::abs(mu_ref + 1.0)) ? +1 : -1;
    }

    SpectralData sd;
    std::vector<cplx> residual;
    double tail_norm = 0.0;
    if (!closing_only) {
        sd = perturbed_fourier(q, K_work, mode);
        check_simple_zeros(sd, N);
        tail_norm = tail_residual_norm(sd, target, &residual, idx);
    }
    ClosingRes closing = eval_closing(q, space, rep.eta, cfg.refined_closing);
    double rnorm = std::hypot(tail_norm, closing.norm());
    rep.residual_history.push_back(rnorm);
    rep.closing_history.push_back(closing.norm());

    int bad_steps = 0;
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        if (rnorm < cfg.tol) break;

        // tail block: Fourier preconditioner
        std::vector<cplx> coeff = residual;
        Potential q_tail = apply_tail_update(q, idx, coeff, 1.0);

        // closing block: solve the 2x2 variation system, including the
        // closing drift the tail step itself induces
        Direction tail_dir;
        tail_dir.dq.resize(static_cast<size_t>(q.n()));
        for (int j = 0; j < q.n(); ++j) {
            tail_dir.dq[static_cast<size_t>(j)] =
                q_tail.sample(j) - q.sample(j);
        }
        ClosingFrames cf = closing_frames(q, space, cfg.refined_closing);
        ClosingRes drift = closing_variation(cf, space, tail_dir);
        std::vector<ClosingRes> cols(static_cast<size_t>(nf));
        for (int c = 0; c < nf; ++c) {
            cols[static_cast<size_t>(c)] = closing_variation(cf, space, fs[static_cast<size_t>(c)]);
        }
        // minimal-norm Gauss-Newton step: (J^T J + ridge) svec = -J^T R
        const int dim = closing.dim;
        std::vector<double> JtJ(static_cast<size_t>(nf * nf), 0.0);
        std::vector<double> Jtr(static_cast<size_t>(nf), 0.0);
        double colscale = 0.0;
        for (int a = 0; a < nf; ++a) {
            for (int b = a; b < nf; ++b) {
                double acc = 0.0;
                for (int i = 0; i < dim; ++i) {
                    acc += cols[static_cast<size_t>(a)].r[static_cast<size_t>(i)] *
                           cols[static_cast<size_t>(b)].r[static_cast<size_t>(i)];
                }
                JtJ[static_cast<size_t>(a * nf + b)] = acc;
                JtJ[static_cast<size_t>(b * nf + a)] = acc;
            }
            colscale = std::max(colscale, JtJ[static_cast<size_t>(a * nf + a)]);
            double acc = 0.0;
            for (int i = 0; i < dim; ++i) {
                acc += cols[static_cast<size_t>(a)].r[static_cast<size_t>(i)] *
                       (closing.r[static_cast<size_t>(i)] + drift.r[static_cast<size_t>(i)]);
            }
            Jtr[static_cast<size_t>(a)] = -acc;
        }
        if (colscale <= 0.0) {
            fail(ErrorKind::Divergence, "solve_Psi: closing block is singular");
        }
        for (int a = 0; a < nf; ++a) JtJ[static_cast<size_t>(a * nf + a)] += 1e-10 * colscale;
        std::vector<double> svec = solve_dense(JtJ, Jtr, nf);
        if (std::getenv("GAPCURVE_DEBUG_PSI")) {
            std::fprintf(stderr, "iter %d: |closing|=%.3e |drift|=%.3e\n", iter, closing.norm(),
                         drift.norm());
        }

        double best_norm = std::numeric_limits<double>::infinity();
        Potential best_q = q;
        SpectralData best_sd = sd;
        std::vector<cplx> best_res = residual;
        ClosingRes best_closing = closing;
        double scale = 1.0;
        bool improved = false;
        for (int halving = 0; halving <= cfg.damping_max; ++halving, scale *= 0.5) {
            try {
                Potential qt = apply_tail_update(q, idx, coeff, scale);
                for (int c = 0; c < nf; ++c) {
                    qt = add_direction(qt, fs[static_cast<size_t>(c)],
                                       scale * svec[static_cast<size_t>(c)]);
                }
                if (qt.l2_norm() > norm_cap) continue;
                SpectralData sdt;
                std::vector<cplx> rest;
                double tn = 0.0;
                if (!closing_only) {
                    sdt = perturbed_fourier(qt, K_work, mode);
                    check_simple_zeros(sdt, N);
                    tn = tail_residual_norm(sdt, target, &rest, idx);
                }
                ClosingRes ct = eval_closing(qt, space, rep.eta, cfg.refined_closing);
                double rt = std::hypot(tn, ct.norm());
                if (std::getenv("GAPCURVE_DEBUG_PSI")) {
                    std::fprintf(stderr, "  trial scale %.3e: rt=%.3e closing=%.3e\n", scale, rt,
                                 ct.norm());
                }
                if (rt < best_norm) {
                    best_norm = rt;
                    best_q = qt;
                    best_sd = sdt;
                    best_res = rest;
                    best_closing = ct;
                }
                if (rt < rnorm) {
                    improved = true;
                    break;
                }
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::Divergence) throw;
                continue;
            }
        }
        if (!std::isfinite(best_norm)) {
            fail(ErrorKind::Divergence,
                 "solve_Psi: no evaluable step; target outside local neighborhood");
        }
        q = best_q;
        sd = best_sd;
        residual = best_res;
        closing = best_closing;
        rnorm = best_norm;
        rep.residual_history.push_back(rnorm);
        rep.closing_history.push_back(closing.norm());
        ++rep.iterations;
        if (improved) {
            bad_steps = 0;
        } else if (++bad_steps >= cfg.max_backtracks) {
            fail(ErrorKind::Divergence,
                 "solve_Psi: residual grew for " + std::to_string(bad_steps) +
                     " damped steps; target outside local neighborhood");
        }
    }
    if (rnorm >= cfg.tol) {
        fail(ErrorKind::Divergence,
             "solve_Psi: residual " + std::to_string(rnorm) + " above tolerance after " +
                 std::to_string(rep.iterations) + " iterations");
    }
    rep.q = std::move(q);
    rep.residual = rnorm;
    rep.closing_residual = closing.norm();
    return rep;
}

double jacobian_fourier_deviation(const Potential& q, int lo, int hi, ParallelMode mode) {
    std::vector<int> idx;
    for (int k = lo; k <= hi; ++k) {
        idx.push_back(k);
        idx.push_back(-k);
    }
    std::vector<Direction> dirs;
    for (int k : idx) {
        dirs.push_back(fourier_mode_direction(q.n(), k, false));
        dirs.push_back(fourier_mode_direction(q.n(), k, true));
    }
    auto J = jacobian_Phi(q, idx, dirs, nullptr, mode);
    // subtract the Fourier map: direction e_m has (dq)^(k) = T delta_{km},
    // direction i e_m has i T delta_{km}
    for (size_t r = 0; r < idx.size(); ++r) {
        J[r][2 * r] -= q.T();
        J[r][2 * r + 1] -= cplx(0.0, q.T());
    }
    std::vector<double> G = real_jacobian_blocks(J);
    int rows = 2 * static_cast<int>(idx.size());
    int cols = 2 * static_cast<int>(idx.size());
    return operator_norm(G, rows, cols) / q.T();
}

int select_N(const Potential& q, int N_max, double bound, int section_halfwidth,
             ParallelMode mode) {
    for (int N = 1; N <= N_max; ++N) {
        int hw = section_halfwidth > 0 ? section_halfwidth : 4 * N;
        double dev = jacobian_fourier_deviation(q, N + 1, N + hw, mode);
        if (dev < bound) return N;
    }
    fail(ErrorKind::Divergence,
         "select_N: no slice width up to " + std::to_string(N_max) +
             " brings the Jacobian within " + std::to_string(bound) + " of the Fourier map");
}

}  // namespace gapcurve
