#pragma once

#include <array>
#include <cmath>
#include <complex>

namespace gapcurve {

using cplx = std::complex<double>;

/// Complex 2x2 matrix, row-major entries (a b / c d).
///
/// Value type for SL2(C) group elements and sl2(C) algebra elements.
/// Arithmetic is exact up to floating round-off; the inverse of a
/// unimodular matrix is its adjugate.
struct Mat2 {
    cplx a{0.0}, b{0.0}, c{0.0}, d{0.0};

    constexpr Mat2() = default;
    constexpr Mat2(cplx a_, cplx b_, cplx c_, cplx d_) : a(a_), b(b_), c(c_), d(d_) {}

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static constexpr Mat2 zero() { return {}; }

    friend Mat2 operator+(const Mat2& x, const Mat2& y) {
        return {x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d};
    }
    friend Mat2 operator-(const Mat2& x, const Mat2& y) {
        return {x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d};
    }
    friend Mat2 operator-(const Mat2& x) { return {-x.a, -x.b, -x.c, -x.d}; }
    friend Mat2 operator*(const Mat2& x, const Mat2& y) {
        return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d,
                x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
    }
    friend Mat2 operator*(cplx s, const Mat2& x) { return {s * x.a, s * x.b, s * x.c, s * x.d}; }
    friend Mat2 operator*(const Mat2& x, cplx s) { return s * x; }
    Mat2& operator+=(const Mat2& y) { return *this = *this + y; }
    Mat2& operator-=(const Mat2& y) { return *this = *this - y; }

    cplx trace() const { return a + d; }
    cplx det() const { return a * d - b * c; }

    Mat2 adjugate() const { return {d, -b, -c, a}; }

    /// Conjugate transpose.
    Mat2 dagger() const {
        return {std::conj(a), std::conj(c), std::conj(b), std::conj(d)};
    }
};

Mat2 inverse(const Mat2& m);

/// Inverse of a unimodular matrix (det = 1): the adjugate, no division.
inline Mat2 inverse_unimodular(const Mat2& m) { return m.adjugate(); }

/// Maximum absolute row sum norm.
double norm_rowsum(const Mat2& m);
double norm_fro(const Mat2& m);
double max_abs_entry(const Mat2& m);

// Basis of sl2(C): eps = diag(i, -i), eps_plus = (0 1 / 0 0),
// eps_minus = (0 0 / -1 0).  Commutators: [eps_minus, eps] = 2i eps_minus,
// [eps, eps_plus] = 2i eps_plus, [eps_plus, eps_minus] = i eps.
inline constexpr Mat2 eps{cplx(0, 1), 0.0, 0.0, cplx(0, -1)};
inline constexpr Mat2 eps_plus{0.0, 1.0, 0.0, 0.0};
inline constexpr Mat2 eps_minus{0.0, 0.0, -1.0, 0.0};

/// Exponential of a traceless 2x2 matrix in closed form:
/// exp(A) = cosh(s) I + sinh(s)/s A with s = sqrt(-det A).
/// Both factors are even in s, so the branch of the root is irrelevant.
/// Requires |tr A| <= 1e-12; the result is unimodular.
Mat2 exp_traceless(const Mat2& A);

/// exp(A) together with its directional derivative along a traceless B,
/// d/dt exp(A + tB) at t = 0, in closed form (no quadrature).
void exp_traceless_with_dexp(const Mat2& A, const Mat2& B, Mat2& E, Mat2& dE);

/// Point of R^3 in coordinates w.r.t. the orthonormal su2 basis
/// {eps, eps_plus + eps_minus, i(eps_plus - eps_minus)}.
struct Su2Vector {
    double x1{0.0}, x2{0.0}, x3{0.0};

    friend Su2Vector operator+(const Su2Vector& u, const Su2Vector& v) {
        return {u.x1 + v.x1, u.x2 + v.x2, u.x3 + v.x3};
    }
    friend Su2Vector operator-(const Su2Vector& u, const Su2Vector& v) {
        return {u.x1 - v.x1, u.x2 - v.x2, u.x3 - v.x3};
    }
    friend Su2Vector operator*(double s, const Su2Vector& v) {
        return {s * v.x1, s * v.x2, s * v.x3};
    }
    double norm() const { return std::sqrt(x1 * x1 + x2 * x2 + x3 * x3); }
};

inline double dot(const Su2Vector& u, const Su2Vector& v) {
    return u.x1 * v.x1 + u.x2 * v.x2 + u.x3 * v.x3;
}
inline Su2Vector cross(const Su2Vector& u, const Su2Vector& v) {
    return {u.x2 * v.x3 - u.x3 * v.x2, u.x3 * v.x1 - u.x1 * v.x3,
            u.x1 * v.x2 - u.x2 * v.x1};
}

/// x -> x1 eps + x2 (eps_plus + eps_minus) + x3 i(eps_plus - eps_minus).
/// The image is trace-free skew-Hermitian with det = |x|^2, and
/// <embed u, embed v> = -1/2 tr(embed(u) embed(v)) is the Euclidean dot.
Mat2 su2_embed(const Su2Vector& x);

/// Inverse of su2_embed.  Rejects X whose Hermitian part exceeds tol.
Su2Vector su2_project(const Mat2& X, double tol = 1e-9);

/// -1/2 tr(XY), the bilinear extension of the su2 inner product.
cplx sl2_inner(const Mat2& X, const Mat2& Y);

}  // namespace gapcurve
