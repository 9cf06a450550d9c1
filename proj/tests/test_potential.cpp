#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "gapcurve/error.hpp"
#include "gapcurve/potential.hpp"
#include "support.hpp"

using namespace gapcurve;
using namespace gapcurve::testing;

TEST_CASE("potential grid invariants") {
    CHECK_THROWS_AS(Potential(std::vector<cplx>(7, 0.0), 1.0), Error);
    CHECK_THROWS_AS(Potential(std::vector<cplx>(9, 0.0), 1.0), Error);
    CHECK_THROWS_AS(Potential(std::vector<cplx>(8, 0.0), -1.0), Error);
}

TEST_CASE("fourier: zero potential") {
    Potential q = vacuum(64, 2.0);
    FourierSeq c = fourier(q, 10);
    for (int k = -10; k <= 10; ++k) CHECK(std::abs(c(k)) == 0.0);
}

TEST_CASE("fourier: single mode is exact") {
    double T = 3.0;
    Potential q = make_potential(
        [T](double t) { return std::exp(cplx(0, -two_pi * t / T)); }, 64, T);
    FourierSeq c = fourier(q, 10);
    for (int k = -10; k <= 10; ++k) {
        if (k == 1) {
            CHECK(std::abs(c(1) - T) < 1e-12);
        } else {
            CHECK(std::abs(c(k)) < 1e-12);
        }
    }
}

TEST_CASE("fourier round trip on band-limited data") {
    auto g = rng(11);
    Potential q = random_bandlimited(g, 128, 2.5, 10, 1.0);
    FourierSeq c = fourier(q, 20);
    Potential back = inverse_fourier(c, 128, 2.5);
    CHECK(l2_distance(q, back) < 1e-12);
}

TEST_CASE("fourier rejects K out of range") {
    Potential q = vacuum(16, 1.0);
    CHECK_THROWS_AS(fourier(q, 8), Error);
}

TEST_CASE("Parseval identity") {
    auto g = rng(12);
    double T = 2.0;
    Potential q = random_bandlimited(g, 128, T, 12, 0.7);
    FourierSeq c = fourier(q, 63);
    double sum = 0.0;
    for (const cplx& v : c.coeff) sum += std::norm(v);
    CHECK(std::abs(sum / T - q.l2_norm() * q.l2_norm()) < 1e-12);
}

TEST_CASE("l2 norms and distances") {
    double T = two_pi;
    CHECK(l2_norm(vacuum(64, T)) == 0.0);
    CHECK(std::abs(l2_norm(constant_potential(1.0, 64, T)) - std::sqrt(two_pi)) < 1e-12);

    auto g = rng(13);
    for (int i = 0; i < 10; ++i) {
        Potential a = random_bandlimited(g, 64, T, 5, 1.0);
        Potential b = random_bandlimited(g, 64, T, 5, 1.0);
        Potential c = random_bandlimited(g, 64, T, 5, 1.0);
        CHECK(l2_distance(a, c) <= l2_distance(a, b) + l2_distance(b, c) + 1e-12);
    }
}

TEST_CASE("l2 distance rejects grid mismatch") {
    CHECK_THROWS_AS(l2_distance(vacuum(32, 1.0), vacuum(64, 1.0)), Error);
}

TEST_CASE("regauge: pure phase raw(t) = e^{it} over T = 2pi") {
    int n = 64;
    double T = two_pi;
    std::vector<cplx> raw(static_cast<size_t>(2 * n));
    for (int j = 0; j < 2 * n; ++j) {
        double t = T * j / n;
        raw[static_cast<size_t>(j)] = std::exp(cplx(0, t));
    }
    RegaugeResult r = regauge(raw, T);
    CHECK(std::abs(r.theta - 1.0) < 1e-12);
    for (int j = 0; j < n; ++j) CHECK(std::abs(r.q.sample(j) - 1.0) < 1e-12);
}

TEST_CASE("regauge: constant raw") {
    int n = 32;
    std::vector<cplx> raw(static_cast<size_t>(2 * n), 1.0);
    RegaugeResult r = regauge(raw, 1.5);
    CHECK(r.theta == 0.0);
    for (int j = 0; j < n; ++j) CHECK(std::abs(r.q.sample(j) - 1.0) == 0.0);
}

TEST_CASE("regauge recovers a constructed (q, theta) pair") {
    int n = 128;
    double T = 4.0;
    double theta = 0.5;
    std::vector<cplx> raw(static_cast<size_t>(2 * n));
    for (int j = 0; j < 2 * n; ++j) {
        double t = T * j / n;
        raw[static_cast<size_t>(j)] =
            (1.0 + 0.1 * std::cos(two_pi * t / T)) * std::exp(cplx(0, theta * t));
    }
    RegaugeResult r = regauge(raw, T);
    CHECK(std::abs(r.theta - theta) < 1e-12);
    for (int j = 0; j < n; ++j) {
        double t = T * j / n;
        CHECK(std::abs(r.q.sample(j) - (1.0 + 0.1 * std::cos(two_pi * t / T))) < 1e-12);
    }
}

TEST_CASE("regauge then unregauge reproduces the raw samples") {
    int n = 64;
    double T = 3.0;
    std::vector<cplx> raw(static_cast<size_t>(2 * n));
    for (int j = 0; j < 2 * n; ++j) {
        double t = T * j / n;
        raw[static_cast<size_t>(j)] =
            (0.8 + 0.2 * std::sin(two_pi * t / T)) * std::exp(cplx(0, -0.7 * t));
    }
    RegaugeResult r = regauge(raw, T);
    std::vector<cplx> back = unregauge(r.q);
    for (int j = 0; j < 2 * n; ++j) {
        CHECK(std::abs(back[static_cast<size_t>(j)] - raw[static_cast<size_t>(j)]) < 1e-12);
    }
}

TEST_CASE("regauge rejects non-quasiperiodic input") {
    int n = 32;
    double T = 1.0;
    std::vector<cplx> raw(static_cast<size_t>(2 * n));
    for (int j = 0; j < 2 * n; ++j) {
        double t = T * j / n;
        raw[static_cast<size_t>(j)] = 1.0 + 0.5 * t;  // not one full period
    }
    CHECK_THROWS_AS(regauge(raw, T), Error);
}

TEST_CASE("midpoint interpolation is exact on band-limited data") {
    double T = 2.0;
    int n = 64;
    auto f = [T](double t) {
        return cplx(std::cos(two_pi * 3.0 * t / T), std::sin(two_pi * 2.0 * t / T));
    };
    Potential q = make_potential(f, n, T);
    for (int j = 0; j < n; ++j) {
        double t = T * (j + 0.5) / n;
        CHECK(std::abs(q.midpoint(j) - f(t)) < 1e-12);
    }
}

TEST_CASE("fft matches the direct transform on non-power-of-two sizes") {
    auto g = rng(14);
    // 24 is even but not a power of two: exercises the direct path
    std::vector<cplx> x(24);
    for (auto& v : x) v = random_cplx(g);
    std::vector<cplx> X = fft_forward(x);
    std::vector<cplx> back = fft_inverse(X);
    for (size_t j = 0; j < x.size(); ++j) CHECK(std::abs(back[j] - x[j]) < 1e-12);
}
