#pragma once

// Shared fixtures and independent oracles for the test suites.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "gapcurve/algebra.hpp"
#include "gapcurve/frame.hpp"
#include "gapcurve/geometry.hpp"
#include "gapcurve/potential.hpp"

namespace gapcurve::testing {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// ---- independent matrix-exponential oracle: Taylor series with
// ---- scaling and squaring (no shared code with exp_traceless)
inline Mat2 exp_oracle(const Mat2& A) {
    double nrm = norm_rowsum(A);
    int squarings = 0;
    Mat2 B = A;
    while (nrm > 0.25) {
        B = 0.5 * B;
        nrm *= 0.5;
        ++squarings;
    }
    Mat2 sum = Mat2::identity();
    Mat2 term = Mat2::identity();
    for (int k = 1; k <= 30; ++k) {
        term = (1.0 / k) * (term * B);
        sum += term;
    }
    for (int s = 0; s < squarings; ++s) sum = sum * sum;
    return sum;
}

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline cplx random_cplx(std::mt19937_64& g, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    return {u(g), u(g)};
}

inline Mat2 random_traceless(std::mt19937_64& g, double scale = 1.0) {
    cplx a = random_cplx(g, scale);
    return {a, random_cplx(g, scale), random_cplx(g, scale), -a};
}

inline Mat2 random_skew_hermitian_traceless(std::mt19937_64& g, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    double x1 = u(g), x2 = u(g), x3 = u(g);
    return su2_embed({x1, x2, x3});
}

// Potential from a closed-form function q(t).
inline Potential make_potential(const std::function<cplx(double)>& f, int n, double T,
                                double theta = 0.0) {
    std::vector<cplx> s(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) s[static_cast<size_t>(j)] = f(T * j / n);
    return Potential(std::move(s), T, theta);
}

inline Potential constant_potential(cplx q0, int n, double T) {
    return make_potential([q0](double) { return q0; }, n, T);
}

inline Potential vacuum(int n, double T) { return constant_potential(0.0, n, T); }

// Random band-limited potential with modes |k| <= band and l2 norm ~ scale.
inline Potential random_bandlimited(std::mt19937_64& g, int n, double T, int band,
                                    double scale) {
    std::vector<cplx> coef(static_cast<size_t>(2 * band + 1));
    double nrm2 = 0.0;
    for (auto& c : coef) {
        c = random_cplx(g, 1.0);
        nrm2 += std::norm(c);
    }
    double factor = scale / std::sqrt(nrm2 * T);  // Parseval: ||q||^2 = sum |c_k|^2 T with c = qhat/T
    return make_potential(
        [&coef, band, T, factor](double t) {
            cplx acc = 0.0;
            for (int k = -band; k <= band; ++k) {
                double ang = -two_pi * k * t / T;
                acc += coef[static_cast<size_t>(k + band)] * cplx(std::cos(ang), std::sin(ang));
            }
            return factor * acc;
        },
        n, T);
}

// Constant-potential monodromy closed form: M = exp(T alpha(q0, lambda)).
inline Mat2 constant_monodromy_oracle(cplx q0, double T, cplx lambda) {
    Mat2 alpha{cplx(0, 1) * (0.5 * lambda), 0.5 * q0, -0.5 * std::conj(q0),
               cplx(0, -1) * (0.5 * lambda)};
    return exp_oracle(T * alpha);
}

// ---- closed-curve fixtures (unit-speed sampling by arclength ODE) ----

struct ParamCurve3 {
    std::function<Su2Vector(double)> r;   // closed curve, u in [0, 2pi)
    std::function<Su2Vector(double)> dr;  // dr/du
};

// Sample the curve at n equal arclength steps; optional rescale of the
// ambient space so the total length becomes T_target (0 = keep length).
inline CurveSamples sample_unit_speed(const ParamCurve3& c, int n, double T_target = 0.0) {
    // total length by fine trapezoid (integrand is smooth periodic)
    const int M = 512 * 16;
    double L = 0.0;
    for (int i = 0; i < M; ++i) {
        L += c.dr(two_pi * i / M).norm();
    }
    L *= two_pi / M;

    // u(s): du/ds = 1 / |r'(u)|, RK4 with small fixed steps
    CurveSamples out;
    out.space = Space::R3;
    double scale = (T_target > 0.0) ? T_target / L : 1.0;
    out.T = L * scale;
    out.times.resize(static_cast<size_t>(n));
    out.points_r3.resize(static_cast<size_t>(n));
    const int sub = 64;  // RK4 steps per output sample
    double u = 0.0;
    const double ds = L / (n * sub);
    auto speed_inv = [&](double uu) { return 1.0 / c.dr(uu).norm(); };
    for (int j = 0; j < n; ++j) {
        out.times[static_cast<size_t>(j)] = out.T * j / n;
        out.points_r3[static_cast<size_t>(j)] = scale * c.r(u);
        for (int s = 0; s < sub; ++s) {
            double k1 = speed_inv(u);
            double k2 = speed_inv(u + 0.5 * ds * k1);
            double k3 = speed_inv(u + 0.5 * ds * k2);
            double k4 = speed_inv(u + ds * k3);
            u += ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
    return out;
}

inline CurveSamples unit_circle(int n) {
    CurveSamples c;
    c.space = Space::R3;
    c.T = two_pi;
    c.times.resize(static_cast<size_t>(n));
    c.points_r3.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        double t = two_pi * j / n;
        c.times[static_cast<size_t>(j)] = t;
        c.points_r3[static_cast<size_t>(j)] = {std::cos(t), std::sin(t), 0.0};
    }
    return c;
}

inline CurveSamples great_circle_s3(int n) {
    CurveSamples c;
    c.space = Space::S3;
    c.T = two_pi;
    c.times.resize(static_cast<size_t>(n));
    c.points_s3.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        double t = two_pi * j / n;
        c.times[static_cast<size_t>(j)] = t;
        c.points_s3[static_cast<size_t>(j)] = {std::cos(t), std::sin(t), 0.0, 0.0};
    }
    return c;
}

inline ParamCurve3 torus_knot_2_3() {
    const double R = 2.0, rho = 0.5;
    ParamCurve3 c;
    c.r = [=](double u) {
        double w = R + rho * std::cos(3.0 * u);
        return Su2Vector{w * std::cos(2.0 * u), w * std::sin(2.0 * u), rho * std::sin(3.0 * u)};
    };
    c.dr = [=](double u) {
        double w = R + rho * std::cos(3.0 * u);
        double dw = -3.0 * rho * std::sin(3.0 * u);
        return Su2Vector{dw * std::cos(2.0 * u) - 2.0 * w * std::sin(2.0 * u),
                         dw * std::sin(2.0 * u) + 2.0 * w * std::cos(2.0 * u),
                         3.0 * rho * std::cos(3.0 * u)};
    };
    return c;
}

// Planar closed perturbation of the unit circle (curvature ~ 1 + eps-mode-2).
inline ParamCurve3 perturbed_circle(double eps) {
    ParamCurve3 c;
    c.r = [=](double u) {
        double w = 1.0 + eps * std::cos(2.0 * u);
        return Su2Vector{w * std::cos(u), w * std::sin(u), 0.0};
    };
    c.dr = [=](double u) {
        double w = 1.0 + eps * std::cos(2.0 * u);
        double dw = -2.0 * eps * std::sin(2.0 * u);
        return Su2Vector{dw * std::cos(u) - w * std::sin(u), dw * std::sin(u) + w * std::cos(u),
                         0.0};
    };
    return c;
}

}  // namespace gapcurve::testing
