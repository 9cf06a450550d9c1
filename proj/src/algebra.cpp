#include "gapcurve/algebra.hpp"

#include <algorithm>

#include "gapcurve/error.hpp"

namespace gapcurve {

namespace {

constexpr double k_trace_tol = 1e-12;  // inputs are constructed traceless

// Entire functions of u = s^2:
//   C(u) = cosh(sqrt(u)) = sum u^k / (2k)!
//   S(u) = sinh(sqrt(u))/sqrt(u) = sum u^k / (2k+1)!
// S is evaluated by its degree-8 Taylor polynomial in s for |s| < 1e-3
// (|u| < 1e-6), which avoids the cancellation at the removable
// singularity s = 0.
cplx cosh_sqrt(cplx u) {
    cplx s = std::sqrt(u);
    return std::cosh(s);
}

cplx sinhc_sqrt(cplx u) {
    if (std::abs(u) < 1e-6) {
        return 1.0 + u * (1.0 / 6.0 + u * (1.0 / 120.0 + u * (1.0 / 5040.0 + u / 362880.0)));
    }
    cplx s = std::sqrt(u);
    return std::sinh(s) / s;
}

// S'(u) = (C(u) - S(u)) / (2u), entire; series near u = 0.
cplx dsinhc_sqrt(cplx u) {
    if (std::abs(u) < 1e-2) {
        // sum_{k>=1} k u^(k-1) / (2k+1)!
        return 1.0 / 6.0 +
               u * (2.0 / 120.0 + u * (3.0 / 5040.0 + u * (4.0 / 362880.0 + u * 5.0 / 39916800.0)));
    }
    return (cosh_sqrt(u) - sinhc_sqrt(u)) / (2.0 * u);
}

void require_traceless(const Mat2& A) {
    if (std::abs(A.trace()) > k_trace_tol) {
        fail(ErrorKind::Domain, "exp_traceless: matrix is not traceless");
    }
}

}  // namespace

Mat2 inverse(const Mat2& m) {
    cplx det = m.det();
    if (std::abs(det) == 0.0) {
        fail(ErrorKind::Domain, "inverse: singular matrix");
    }
    cplx s = 1.0 / det;
    return {s * m.d, -s * m.b, -s * m.c, s * m.a};
}

double norm_rowsum(const Mat2& m) {
    return std::max(std::abs(m.a) + std::abs(m.b), std::abs(m.c) + std::abs(m.d));
}

double norm_fro(const Mat2& m) {
    return std::sqrt(std::norm(m.a) + std::norm(m.b) + std::norm(m.c) + std::norm(m.d));
}

double max_abs_entry(const Mat2& m) {
    return std::max(std::max(std::abs(m.a), std::abs(m.b)),
                    std::max(std::abs(m.c), std::abs(m.d)));
}

Mat2 exp_traceless(const Mat2& A) {
    require_traceless(A);
    cplx u = -A.det();  // u = s^2
    cplx ch = cosh_sqrt(u);
    cplx sh = sinhc_sqrt(u);
    return {ch + sh * A.a, sh * A.b, sh * A.c, ch + sh * A.d};
}

void exp_traceless_with_dexp(const Mat2& A, const Mat2& B, Mat2& E, Mat2& dE) {
    require_traceless(A);
    // For traceless 2x2, exp(A) = C(u) I + S(u) A with u = -det A exactly
    // (Cayley-Hamilton), so the differential in direction B is
    //   dE = C'(u) du I + S'(u) du A + S(u) B,  du = tr(A B).
    // C' = S/2; all coefficients are entire in u, hence branch-free.
    cplx u = -A.det();
    cplx du = A.a * B.a + A.b * B.c + A.c * B.b + A.d * B.d;
    cplx ch = cosh_sqrt(u);
    cplx sh = sinhc_sqrt(u);
    cplx dsh = dsinhc_sqrt(u);
    E = Mat2{ch + sh * A.a, sh * A.b, sh * A.c, ch + sh * A.d};
    cplx c1 = 0.5 * sh * du;
    cplx c2 = dsh * du;
    dE = Mat2{c1 + c2 * A.a + sh * B.a, c2 * A.b + sh * B.b,
              c2 * A.c + sh * B.c, c1 + c2 * A.d + sh * B.d};
}

Mat2 su2_embed(const Su2Vector& x) {
    return {cplx(0, x.x1), cplx(x.x2, x.x3), cplx(-x.x2, x.x3), cplx(0, -x.x1)};
}

Su2Vector su2_project(const Mat2& X, double tol) {
    // Hermitian part must vanish: X + X^dagger = 0, and tr X = 0.
    Mat2 herm = X + X.dagger();
    double defect = norm_fro(herm) + std::abs(X.trace());
    double scale = std::max(1.0, norm_fro(X));
    if (defect > tol * scale) {
        fail(ErrorKind::Domain, "su2_project: matrix is not trace-free skew-Hermitian");
    }
    return {X.a.imag(), X.b.real(), X.b.imag()};
}

cplx sl2_inner(const Mat2& X, const Mat2& Y) {
    return -0.5 * (X * Y).trace();
}

}  // namespace gapcurve
