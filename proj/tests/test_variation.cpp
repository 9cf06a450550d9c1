#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gapcurve/error.hpp"
#include "gapcurve/inverse.hpp"
#include "gapcurve/variation.hpp"
#include "support.hpp"

using namespace gapcurve;
using namespace gapcurve::testing;

namespace {

Potential perturb(const Potential& q, const Direction& d, double h) {
    std::vector<cplx> s = q.samples();
    for (size_t j = 0; j < s.size(); ++j) s[j] += h * d.dq[j];
    return Potential(std::move(s), q.T(), q.theta());
}

Mat2 fd_delta_M(const Potential& q, cplx lambda, const Direction& d, double h) {
    Mat2 mp = monodromy(perturb(q, d, h), lambda).M;
    Mat2 mm = monodromy(perturb(q, d, -h), lambda).M;
    return (1.0 / (2.0 * h)) * (mp - mm);
}

cplx fd_delta_mu(const Potential& q, cplx lambda, const Direction& d, double h) {
    cplx mu0 = mu(q, lambda, +1);
    auto branch_near = [&](const Potential& qq) {
        cplx a = mu(qq, lambda, +1), b = mu(qq, lambda, -1);
        return (std::abs(a - mu0) <= std::abs(b - mu0)) ? a : b;
    };
    return (branch_near(perturb(q, d, h)) - branch_near(perturb(q, d, -h))) / (2.0 * h);
}

// local Newton relocation of a zero of a - d from a seed
cplx relocate_zero(const Potential& q, cplx seed) {
    cplx z = seed;
    for (int it = 0; it < 60; ++it) {
        Monodromy m = monodromy(q, z);
        cplx f = m.M.a - m.M.d;
        cplx fp = m.Mprime.a - m.Mprime.d;
        cplx step = f / fp;
        z -= step;
        if (std::abs(step) < 1e-13 * std::max(1.0, std::abs(z))) break;
    }
    return z;
}

cplx z_of(const Potential& q, cplx lambda_k, int k) {
    Mat2 M = monodromy(q, lambda_k).M;
    double sign = (k % 2 == 0) ? 2.0 : -2.0;
    return sign * M.b;
}

}  // namespace

TEST_CASE("delta_M: zero direction and linearity") {
    auto g = rng(50);
    Potential q = random_bandlimited(g, 128, two_pi, 3, 0.6);
    FrameTrajectory traj = integrate_frame(q, cplx(0.8, 0.1));

    Direction zero;
    zero.dq.assign(128, 0.0);
    CHECK(max_abs_entry(delta_M(traj, zero)) == 0.0);

    // the map dq -> dM is real-linear (it involves conj dq)
    Direction d1 = fourier_mode_direction(128, 1);
    Direction d2 = sin_mode_direction(128, 2);
    double a = 0.3, b = -1.7;
    Direction comb;
    comb.dq.resize(128);
    for (int j = 0; j < 128; ++j) {
        comb.dq[static_cast<size_t>(j)] =
            a * d1.dq[static_cast<size_t>(j)] + b * d2.dq[static_cast<size_t>(j)];
    }
    Mat2 lhs = delta_M(traj, comb);
    Mat2 rhs = a * delta_M(traj, d1) + b * delta_M(traj, d2);
    CHECK(max_abs_entry(lhs - rhs) < 1e-12 * std::max(1.0, max_abs_entry(rhs)));
}

TEST_CASE("delta_M matches central finite differences") {
    auto g = rng(51);
    // fine grid so the trapezoid variation formula is resolved well below
    // the 1e-6 comparison tolerance
    Potential q = random_bandlimited(g, 8192, two_pi, 3, 0.5);
    for (int c = 0; c < 3; ++c) {
        cplx lambda = random_cplx(g, 1.5);
        Direction d = fourier_mode_direction(8192, c - 1);
        Mat2 dm = delta_M(q, lambda, d);
        Mat2 fd = fd_delta_M(q, lambda, d, 1e-5);
        double scale = std::max(1.0, max_abs_entry(dm));
        CHECK(max_abs_entry(dm - fd) < 1e-6 * scale);
    }
}

TEST_CASE("vacuum delta_M has the Fourier off-diagonal form") {
    // 2 (-1)^k delta M(lambda_{k,0}) = ((0, dq^(k)), (-conj dq^(-k), 0))
    double T = two_pi;
    int n = 1024;
    Potential q = vacuum(n, T);
    for (int k : {0, 1, 3, -2}) {
        FrameTrajectory traj = integrate_frame(q, lattice_point(T, k));
        for (int m : {-2, 0, 1, 3}) {
            Direction d = fourier_mode_direction(n, m);
            Mat2 dm = delta_M(traj, d);
            double sign = (k % 2 == 0) ? 2.0 : -2.0;
            Mat2 lhs = sign * dm;
            cplx expected_b = (m == k) ? cplx(T) : cplx(0.0);
            // -conj(dq)^(-k): conj(e^{-i m t omega}) = e^{+i m t omega} pairs at -k = -m
            cplx expected_c = (m == k) ? -cplx(T) : cplx(0.0);
            CHECK(std::abs(lhs.b - expected_b) < 1e-10);
            CHECK(std::abs(lhs.c - expected_c) < 1e-10);
            CHECK(std::abs(lhs.a) < 1e-10);
            CHECK(std::abs(lhs.d) < 1e-10);
        }
    }
}

TEST_CASE("delta_mu: zero off-diagonal variation at the vacuum") {
    double T = two_pi;
    Potential q = vacuum(256, T);
    FrameTrajectory traj = integrate_frame(q, 0.37);  // off-lattice real lambda
    for (int m : {-1, 1, 2}) {
        cplx dmu = delta_mu(traj, fourier_mode_direction(256, m), +1);
        CHECK(std::abs(dmu) < 1e-12);
    }
}

TEST_CASE("delta_mu matches finite differences with branch tracking") {
    auto g = rng(52);
    Potential q = random_bandlimited(g, 8192, two_pi, 3, 0.5);
    for (int c = 0; c < 3; ++c) {
        cplx lambda(0.3 + 0.31 * c, 0.1);
        Direction d = (c == 0) ? cos_mode_direction(8192, 1) : fourier_mode_direction(8192, c);
        cplx dm = delta_mu(q, lambda, d, +1);
        cplx fd = fd_delta_mu(q, lambda, d, 1e-5);
        CHECK(std::abs(dm - fd) < 1e-6 * std::max(1.0, std::abs(dm)));
    }
}

TEST_CASE("delta_mu at the vacuum lattice point stays finite and zero") {
    // M0 = -1 there; the stabilized eigenvectors keep the formula usable
    // and off-diagonal directions give exactly zero
    Potential q = vacuum(256, two_pi);
    FrameTrajectory traj = integrate_frame(q, lattice_point(two_pi, 1));
    cplx dmu = delta_mu(traj, fourier_mode_direction(256, 1), +1);
    CHECK(std::abs(dmu) < 1e-10);
}

TEST_CASE("eigen_pair flags a Jordan point as degenerate") {
    Mat2 jordan{1.0, 1.0, 0.0, 1.0};  // mu = 1, M != 1
    EigenPair p = eigen_pair(jordan, +1);
    CHECK(p.degenerate);
    Mat2 semisimple{cplx(0.6, 0.8), 0.0, 0.0, cplx(0.6, -0.8)};
    CHECK(!eigen_pair(semisimple, +1).degenerate);
}

TEST_CASE("delta_lambda_k and delta_z_k match the relocation pipeline") {
    auto g = rng(53);
    int n = 8192;
    Potential q = random_bandlimited(g, n, two_pi, 2, 0.35);
    SpectralData sd = locate_lambda_k(q, 6);
    const double h = 1e-5;
    for (int k : {4, -5, 6}) {
        const SpectralEntry& e = sd.at(k);
        REQUIRE(e.mult == 1);
        Direction d = fourier_mode_direction(n, k >= 0 ? k : -k);
        cplx dl = delta_lambda_k(q, e, d);
        cplx dz = delta_z_k(q, e, d);

        Potential qp = perturb(q, d, h);
        Potential qm = perturb(q, d, -h);
        cplx lp = relocate_zero(qp, e.lambda);
        cplx lm = relocate_zero(qm, e.lambda);
        cplx fd_l = (lp - lm) / (2.0 * h);
        cplx fd_z = (z_of(qp, lp, k) - z_of(qm, lm, k)) / (2.0 * h);

        CHECK(std::abs(dl - fd_l) < 1e-5 * std::max(1.0, std::abs(dl)));
        CHECK(std::abs(dz - fd_z) < 1e-5 * std::max(1.0, std::abs(dz)));
    }
}

TEST_CASE("delta at a multiple zero is refused") {
    Potential q = constant_potential(1.0, 128, two_pi);
    SpectralData sd = locate_lambda_k(q, 9);
    REQUIRE(sd.at(0).mult == 3);
    CHECK_THROWS_AS(delta_lambda_k(q, sd.at(0), fourier_mode_direction(128, 1)), Error);
}

TEST_CASE("FD error of the oracle itself is second order (Richardson)") {
    auto g = rng(54);
    Potential q = random_bandlimited(g, 2048, two_pi, 3, 0.8);
    cplx lambda(0.7, 0.2);
    Direction d = cos_mode_direction(2048, 2);
    Mat2 f3 = fd_delta_M(q, lambda, d, 1e-3);
    Mat2 f4 = fd_delta_M(q, lambda, d, 1e-4);
    Mat2 f5 = fd_delta_M(q, lambda, d, 1e-5);
    double d34 = max_abs_entry(f3 - f4);
    double d45 = max_abs_entry(f4 - f5);
    double ratio = d34 / d45;
    CHECK(ratio > 25.0);
    CHECK(ratio < 400.0);
}

TEST_CASE("unimodularity transfers to the variation: tr(M^{-1} dM) = 0") {
    auto g = rng(55);
    Potential q = random_bandlimited(g, 256, two_pi, 3, 0.7);
    FrameTrajectory traj = integrate_frame(q, cplx(1.2, -0.4));
    Mat2 M = traj.back();
    for (int m : {-2, 1}) {
        Mat2 dm = delta_M(traj, fourier_mode_direction(256, m));
        cplx tr = (inverse_unimodular(M) * dm).trace();
        CHECK(std::abs(tr) < 1e-9);
    }
}

TEST_CASE("vacuum Jacobian is T times the identity") {
    double T = two_pi;
    int n = 512;
    Potential q = vacuum(n, T);
    std::vector<int> idx = {2, 3, -2};
    std::vector<Direction> dirs;
    for (int k : idx) {
        dirs.push_back(fourier_mode_direction(n, k, false));
        dirs.push_back(fourier_mode_direction(n, k, true));
    }
    auto J = jacobian_Phi(q, idx, dirs);
    for (size_t r = 0; r < idx.size(); ++r) {
        for (size_t c = 0; c < dirs.size(); ++c) {
            cplx expect = 0.0;
            if (c == 2 * r) expect = T;
            if (c == 2 * r + 1) expect = cplx(0.0, T);
            CHECK(std::abs(J[r][c] - expect) < 1e-9);
        }
    }
}

TEST_CASE("Jacobian deviates from the Fourier map by less than 1/2 for small potentials") {
    auto g = rng(56);
    Potential q = random_bandlimited(g, 256, two_pi, 2, 0.3);
    double dev = jacobian_fourier_deviation(q, 3, 8);
    CHECK(dev < 0.5);
}
