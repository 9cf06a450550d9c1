#include "gapcurve/frame.hpp"

#include <cmath>
#include <string>

#include "gapcurve/error.hpp"

namespace gapcurve {

namespace {

void check_resolution(const Potential& q, cplx lambda) {
    double bound = lambda_resolution_bound(q);
    if (std::abs(lambda) > bound) {
        fail(ErrorKind::Resolution,
             "lambda = " + std::to_string(std::abs(lambda)) +
                 " exceeds the grid resolution bound " + std::to_string(bound) +
                 "; increase the grid size n");
    }
}

}  // namespace

Mat2 alpha_of(cplx qval, cplx lambda) {
    cplx half_l = 0.5 * lambda;
    return {cplx(0, 1) * half_l, 0.5 * qval, -0.5 * std::conj(qval), cplx(0, -1) * half_l};
}

Mat2 alpha_at(const Potential& q, int j, cplx lambda) {
    return alpha_of(q.sample(j), lambda);
}

FrameTrajectory integrate_frame(const Potential& q, cplx lambda, bool with_derivative) {
    check_resolution(q, lambda);
    const int n = q.n();
    const double h = q.dt();

    FrameTrajectory out;
    out.lambda = lambda;
    out.T = q.T();
    out.times.resize(static_cast<size_t>(n + 1));
    out.frames.resize(static_cast<size_t>(n + 1));
    if (with_derivative) out.dframes.resize(static_cast<size_t>(n + 1));

    Mat2 F = Mat2::identity();
    Mat2 dF = Mat2::zero();
    out.times[0] = 0.0;
    out.frames[0] = F;
    if (with_derivative) out.dframes[0] = dF;

    const Mat2 dalpha{cplx(0, 0.5 * h), 0.0, 0.0, cplx(0, -0.5 * h)};  // d(h alpha)/dlambda
    for (int j = 0; j < n; ++j) {
        Mat2 A = h * alpha_of(q.midpoint(j), lambda);
        if (with_derivative) {
            Mat2 E, dE;
            exp_traceless_with_dexp(A, dalpha, E, dE);
            dF = dF * E + F * dE;
            F = F * E;
        } else {
            F = F * exp_traceless(A);
        }
        out.times[static_cast<size_t>(j + 1)] = h * (j + 1);
        out.frames[static_cast<size_t>(j + 1)] = F;
        if (with_derivative) out.dframes[static_cast<size_t>(j + 1)] = dF;
    }
    return out;
}

Monodromy monodromy(const Potential& q, cplx lambda) {
    check_resolution(q, lambda);
    const int n = q.n();
    const double h = q.dt();
    Mat2 F = Mat2::identity();
    Mat2 dF = Mat2::zero();
    const Mat2 dalpha{cplx(0, 0.5 * h), 0.0, 0.0, cplx(0, -0.5 * h)};
    for (int j = 0; j < n; ++j) {
        Mat2 A = h * alpha_of(q.midpoint(j), lambda);
        Mat2 E, dE;
        exp_traceless_with_dexp(A, dalpha, E, dE);
        dF = dF * E + F * dE;
        F = F * E;
    }
    return {lambda, F, dF};
}

Mat2 vacuum_frame(double t, cplx lambda) {
    cplx e = std::exp(cplx(0, 1) * (0.5 * lambda * t));
    return {e, 0.0, 0.0, 1.0 / e};
}

Mat2 vacuum_monodromy(double T, cplx lambda) { return vacuum_frame(T, lambda); }

double picard_remainder_bound(const Potential& q, cplx lambda, int m) {
    // int_0^T ||alpha|| with the row-sum norm, trapezoid on the grid.
    double integral = 0.0;
    for (int j = 0; j < q.n(); ++j) {
        integral += norm_rowsum(alpha_at(q, j, lambda));
    }
    integral *= q.dt();
    double bound = 1.0;
    for (int i = 1; i <= m + 1; ++i) bound *= integral / i;
    return bound;
}

Mat2 picard_series(const Potential& q, cplx lambda, const PicardOptions& opt) {
    check_resolution(q, lambda);
    int terms = -1;
    for (int m = 1; m <= opt.n_terms; ++m) {
        if (picard_remainder_bound(q, lambda, m) <= opt.tol) {
            terms = m;
            break;
        }
    }
    if (terms < 0) {
        fail(ErrorKind::Domain,
             "picard_series: remainder bound not satisfiable within " +
                 std::to_string(opt.n_terms) + " terms");
    }

    const int n = q.n();
    const double h = q.dt();
    std::vector<Mat2> alpha(static_cast<size_t>(n + 1));
    for (int j = 0; j < n; ++j) alpha[static_cast<size_t>(j)] = alpha_at(q, j, lambda);
    alpha[static_cast<size_t>(n)] = alpha[0];  // periodic sample at t = T

    // I_m(t) = int_0^t I_{m-1}(s) alpha(s) ds by cumulative trapezoid.
    std::vector<Mat2> prev(static_cast<size_t>(n + 1), Mat2::identity());
    Mat2 total = Mat2::identity();
    for (int m = 1; m <= terms; ++m) {
        std::vector<Mat2> cur(static_cast<size_t>(n + 1));
        cur[0] = Mat2::zero();
        for (int j = 0; j < n; ++j) {
            Mat2 inc = 0.5 * h *
                       (prev[static_cast<size_t>(j)] * alpha[static_cast<size_t>(j)] +
                        prev[static_cast<size_t>(j + 1)] * alpha[static_cast<size_t>(j + 1)]);
            cur[static_cast<size_t>(j + 1)] = cur[static_cast<size_t>(j)] + inc;
        }
        total += cur[static_cast<size_t>(n)];
        prev = std::move(cur);
    }
    return total;
}

}  // namespace gapcurve
