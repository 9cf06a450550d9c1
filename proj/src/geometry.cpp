#include "gapcurve/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gapcurve/error.hpp"
#include "gapcurve/parallel.hpp"
#include "gapcurve/spectral.hpp"
#include "gapcurve/variation.hpp"

namespace gapcurve {

namespace {

using Vec4 = std::array<double, 4>;

double dot4(const Vec4& a, const Vec4& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}
double norm4(const Vec4& a) { return std::sqrt(dot4(a, a)); }
Vec4 add4(const Vec4& a, const Vec4& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]};
}
Vec4 scale4(double s, const Vec4& a) { return {s * a[0], s * a[1], s * a[2], s * a[3]}; }
Vec4 axpy4(const Vec4& a, double s, const Vec4& b) {
    return {a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2], a[3] + s * b[3]};
}

double det3(double a0, double a1, double a2, double b0, double b1, double b2, double c0,
            double c1, double c2) {
    return a0 * (b1 * c2 - b2 * c1) - a1 * (b0 * c2 - b2 * c0) + a2 * (b0 * c1 - b1 * c0);
}

// Oriented orthogonal complement of an orthonormal triple in R^4, signed so
// that cross4(e0, e1, e2) = +e3.
Vec4 cross4(const Vec4& a, const Vec4& b, const Vec4& c) {
    Vec4 d;
    d[0] = -det3(a[1], a[2], a[3], b[1], b[2], b[3], c[1], c[2], c[3]);
    d[1] = det3(a[0], a[2], a[3], b[0], b[2], b[3], c[0], c[2], c[3]);
    d[2] = -det3(a[0], a[1], a[3], b[0], b[1], b[3], c[0], c[1], c[3]);
    d[3] = det3(a[0], a[1], a[2], b[0], b[1], b[2], c[0], c[1], c[2]);
    return d;
}

// Minimal rotation taking unit u to unit v, applied to x.
Vec4 rotate_towards4(const Vec4& u, const Vec4& v, const Vec4& x) {
    double c = dot4(u, v);
    if (1.0 + c < 1e-12) {
        fail(ErrorKind::Domain, "parallel transport hit an antipodal step (degenerate segment)");
    }
    Vec4 w = add4(u, v);
    double f = dot4(w, x) / (1.0 + c);
    Vec4 out = axpy4(x, -f, w);
    return axpy4(out, 2.0 * dot4(u, x), v);
}

Su2Vector rotate_towards3(const Su2Vector& u, const Su2Vector& v, const Su2Vector& x) {
    double c = dot(u, v);
    if (1.0 + c < 1e-12) {
        fail(ErrorKind::Domain, "parallel transport hit an antipodal step (degenerate segment)");
    }
    Su2Vector w = u + v;
    Su2Vector out = x - (dot(w, x) / (1.0 + c)) * w;
    return out + (2.0 * dot(u, x)) * v;
}

// Spectral derivative of one periodic real sequence, Nyquist mode dropped.
std::vector<double> fft_derivative(const std::vector<double>& x, double T) {
    const int n = static_cast<int>(x.size());
    std::vector<cplx> z(x.begin(), x.end());
    std::vector<cplx> X = fft_forward(z);
    const double two_pi = 2.0 * std::numbers::pi;
    for (int m = 0; m < n; ++m) {
        double k = (m <= n / 2) ? m : m - n;
        if (m == n / 2) {
            X[static_cast<size_t>(m)] = 0.0;
            continue;
        }
        X[static_cast<size_t>(m)] *= cplx(0.0, two_pi * k / T);
    }
    std::vector<cplx> d = fft_inverse(X);
    std::vector<double> out(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) out[static_cast<size_t>(j)] = d[static_cast<size_t>(j)].real();
    return out;
}

// Band-limited values at t_{j+1/2} (half-sample spectral shift).
std::vector<double> fft_half_shift(const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    std::vector<cplx> z(x.begin(), x.end());
    std::vector<cplx> X = fft_forward(z);
    const double pi = std::numbers::pi;
    for (int m = 0; m < n; ++m) {
        double k = (m <= n / 2) ? m : m - n;
        if (m == n / 2) {
            X[static_cast<size_t>(m)] *= std::cos(pi * k / n);
            continue;
        }
        double ang = 2.0 * pi * k * 0.5 / n;
        X[static_cast<size_t>(m)] *= cplx(std::cos(ang), std::sin(ang));
    }
    std::vector<cplx> y = fft_inverse(X);
    std::vector<double> out(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) out[static_cast<size_t>(j)] = y[static_cast<size_t>(j)].real();
    return out;
}

struct R3Fields {
    std::vector<Su2Vector> tangent;   // unit tangents
    std::vector<Su2Vector> dtangent;  // dT/dt
    std::vector<Su2Vector> tangent_mid;  // tangents at t_{j+1/2}
};

R3Fields r3_fields(const CurveSamples& curve) {
    const int n = curve.n();
    std::vector<double> cx(static_cast<size_t>(n)), cy(static_cast<size_t>(n)),
        cz(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        cx[static_cast<size_t>(j)] = curve.points_r3[static_cast<size_t>(j)].x1;
        cy[static_cast<size_t>(j)] = curve.points_r3[static_cast<size_t>(j)].x2;
        cz[static_cast<size_t>(j)] = curve.points_r3[static_cast<size_t>(j)].x3;
    }
    std::vector<double> dx = fft_derivative(cx, curve.T), dy = fft_derivative(cy, curve.T),
                        dz = fft_derivative(cz, curve.T);
    R3Fields f;
    f.tangent.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        Su2Vector t{dx[static_cast<size_t>(j)], dy[static_cast<size_t>(j)],
                    dz[static_cast<size_t>(j)]};
        double s = t.norm();
        if (s < 1e-12) fail(ErrorKind::Domain, "ingest: degenerate (zero-speed) segment");
        f.tangent[static_cast<size_t>(j)] = (1.0 / s) * t;
    }
    std::vector<double> tx(static_cast<size_t>(n)), ty(static_cast<size_t>(n)),
        tz(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        tx[static_cast<size_t>(j)] = f.tangent[static_cast<size_t>(j)].x1;
        ty[static_cast<size_t>(j)] = f.tangent[static_cast<size_t>(j)].x2;
        tz[static_cast<size_t>(j)] = f.tangent[static_cast<size_t>(j)].x3;
    }
    std::vector<double> ddx = fft_derivative(tx, curve.T), ddy = fft_derivative(ty, curve.T),
                        ddz = fft_derivative(tz, curve.T);
    f.dtangent.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        f.dtangent[static_cast<size_t>(j)] = {ddx[static_cast<size_t>(j)],
                                              ddy[static_cast<size_t>(j)],
                                              ddz[static_cast<size_t>(j)]};
    }
    std::vector<double> mx = fft_half_shift(tx), my = fft_half_shift(ty), mz = fft_half_shift(tz);
    f.tangent_mid.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        Su2Vector t{mx[static_cast<size_t>(j)], my[static_cast<size_t>(j)], mz[static_cast<size_t>(j)]};
        double sn = t.norm();
        f.tangent_mid[static_cast<size_t>(j)] = (sn > 1e-12) ? (1.0 / sn) * t : t;
    }
    return f;
}

struct S3Fields {
    std::vector<Vec4> point;
    std::vector<Vec4> tangent;   // unit tangents in T_p S3
    std::vector<Vec4> dtangent;  // plain d/dt of the tangent samples
    std::vector<Vec4> point_mid;
    std::vector<Vec4> tangent_mid;
};

S3Fields s3_fields(const CurveSamples& curve) {
    const int n = curve.n();
    S3Fields f;
    f.point.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        f.point[static_cast<size_t>(j)] = curve.points_s3[static_cast<size_t>(j)];
    }

    std::array<std::vector<double>, 4> comp;
    for (auto& v : comp) v.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        for (int c = 0; c < 4; ++c) {
            comp[static_cast<size_t>(c)][static_cast<size_t>(j)] =
                f.point[static_cast<size_t>(j)][static_cast<size_t>(c)];
        }
    }
    std::array<std::vector<double>, 4> dcomp;
    for (int c = 0; c < 4; ++c) {
        dcomp[static_cast<size_t>(c)] = fft_derivative(comp[static_cast<size_t>(c)], curve.T);
    }

    f.tangent.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        Vec4 t{dcomp[0][static_cast<size_t>(j)], dcomp[1][static_cast<size_t>(j)],
               dcomp[2][static_cast<size_t>(j)], dcomp[3][static_cast<size_t>(j)]};
        t = axpy4(t, -dot4(t, f.point[static_cast<size_t>(j)]), f.point[static_cast<size_t>(j)]);
        double s = norm4(t);
        if (s < 1e-12) fail(ErrorKind::Domain, "ingest: degenerate (zero-speed) segment");
        f.tangent[static_cast<size_t>(j)] = scale4(1.0 / s, t);
    }
    std::array<std::vector<double>, 4> tcomp;
    for (auto& v : tcomp) v.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        for (int c = 0; c < 4; ++c) {
            tcomp[static_cast<size_t>(c)][static_cast<size_t>(j)] =
                f.tangent[static_cast<size_t>(j)][static_cast<size_t>(c)];
        }
    }
    f.dtangent.resize(static_cast<size_t>(n));
    std::array<std::vector<double>, 4> dtc;
    for (int c = 0; c < 4; ++c) {
        dtc[static_cast<size_t>(c)] = fft_derivative(tcomp[static_cast<size_t>(c)], curve.T);
    }
    for (int j = 0; j < n; ++j) {
        f.dtangent[static_cast<size_t>(j)] = {
            dtc[0][static_cast<size_t>(j)], dtc[1][static_cast<size_t>(j)],
            dtc[2][static_cast<size_t>(j)], dtc[3][static_cast<size_t>(j)]};
    }
    std::array<std::vector<double>, 4> pm, tm;
    for (int c = 0; c < 4; ++c) {
        pm[static_cast<size_t>(c)] = fft_half_shift(comp[static_cast<size_t>(c)]);
        tm[static_cast<size_t>(c)] = fft_half_shift(tcomp[static_cast<size_t>(c)]);
    }
    f.point_mid.resize(static_cast<size_t>(n));
    f.tangent_mid.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        Vec4 p{pm[0][static_cast<size_t>(j)], pm[1][static_cast<size_t>(j)],
               pm[2][static_cast<size_t>(j)], pm[3][static_cast<size_t>(j)]};
        p = scale4(1.0 / norm4(p), p);
        Vec4 t{tm[0][static_cast<size_t>(j)], tm[1][static_cast<size_t>(j)],
               tm[2][static_cast<size_t>(j)], tm[3][static_cast<size_t>(j)]};
        t = axpy4(t, -dot4(t, p), p);
        double sn = norm4(t);
        if (sn > 1e-12) t = scale4(1.0 / sn, t);
        f.point_mid[static_cast<size_t>(j)] = p;
        f.tangent_mid[static_cast<size_t>(j)] = t;
    }
    return f;
}

void validate_speed_and_closure(const CurveSamples& curve, const IngestOptions& opt) {
    const int n = curve.n();
    const double h = curve.dt();
    for (int j = 0; j < n; ++j) {
        int jn = (j + 1) % n;
        double step;
        if (curve.space == Space::R3) {
            step = (curve.points_r3[static_cast<size_t>(jn)] -
                    curve.points_r3[static_cast<size_t>(j)])
                       .norm();
        } else {
            Vec4 a = curve.points_s3[static_cast<size_t>(j)];
            Vec4 b = curve.points_s3[static_cast<size_t>(jn)];
            Vec4 dif{b[0] - a[0], b[1] - a[1], b[2] - a[2], b[3] - a[3]};
            step = 2.0 * std::asin(std::min(1.0, 0.5 * norm4(dif)));
        }
        if (j == n - 1) {
            // the wrap step detects non-closed input
            if (step > h * (1.0 + opt.speed_tol) + opt.closure_tol) {
                fail(ErrorKind::Domain, "ingest: curve not closed");
            }
            continue;
        }
        if (step < 0.25 * h) {
            fail(ErrorKind::Domain, "ingest: degenerate (zero-length) segment");
        }
        if (step < h * (1.0 - opt.speed_tol) - 1e-12 ||
            step > h * (1.0 + opt.speed_tol) + 1e-12) {
            fail(ErrorKind::Domain, "ingest: curve is not unit-speed to tolerance");
        }
    }
}

Su2Vector pick_normal3(const Su2Vector& t, const Su2Vector& acc) {
    Su2Vector n = acc - dot(acc, t) * t;
    if (n.norm() > 1e-8) return (1.0 / n.norm()) * n;
    // deterministic fallback: the coordinate axis least aligned with t
    const Su2Vector cand[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    int best = 0;
    double bestd = 2.0;
    for (int i = 0; i < 3; ++i) {
        double d = std::abs(dot(cand[i], t));
        if (d < bestd) {
            bestd = d;
            best = i;
        }
    }
    Su2Vector n2 = cand[best] - dot(cand[best], t) * t;
    return (1.0 / n2.norm()) * n2;
}

Vec4 pick_normal4(const Vec4& p, const Vec4& t, const Vec4& acc) {
    Vec4 n = acc;
    n = axpy4(n, -dot4(n, p), p);
    n = axpy4(n, -dot4(n, t), t);
    if (norm4(n) > 1e-8) return scale4(1.0 / norm4(n), n);
    for (int i = 0; i < 4; ++i) {
        Vec4 cand{0, 0, 0, 0};
        cand[static_cast<size_t>(i)] = 1.0;
        Vec4 c = cand;
        c = axpy4(c, -dot4(c, p), p);
        c = axpy4(c, -dot4(c, t), t);
        if (norm4(c) > 0.3) return scale4(1.0 / norm4(c), c);
    }
    fail(ErrorKind::Domain, "ingest: could not construct an initial normal");
}

}  // namespace

Mat2 quat_to_su2(const Quat& p) {
    return {cplx(p[0], p[1]), cplx(p[2], p[3]), cplx(-p[2], p[3]), cplx(p[0], -p[1])};
}

Quat su2_to_quat(const Mat2& U) {
    return {U.a.real(), U.a.imag(), U.b.real(), U.b.imag()};
}

Potential ingest(const CurveSamples& curve, const IngestOptions& opt) {
    const int n = curve.n();
    if (n < 8 || n % 2 != 0) {
        fail(ErrorKind::Domain, "ingest: need an even number (>= 8) of samples");
    }
    validate_speed_and_closure(curve, opt);

    // Natural curvatures of a discrete parallel frame over two laps; the
    // second lap picks up the frame holonomy, which regauge turns into
    // theta.  The stepwise rotation transport is second order; running it
    // with whole steps and with half steps (band-limited midpoint data)
    // and Richardson-extrapolating the frames removes the leading error.
    std::vector<cplx> raw(static_cast<size_t>(2 * n));
    if (curve.space == Space::R3) {
        R3Fields f = r3_fields(curve);
        Su2Vector e0 = pick_normal3(f.tangent[0], f.dtangent[0]);

        auto transport = [&](bool half_steps) {
            std::vector<Su2Vector> e(static_cast<size_t>(2 * n));
            Su2Vector e1 = e0;
            for (int j = 0; j < 2 * n; ++j) {
                int jj = j % n;
                const Su2Vector& t = f.tangent[static_cast<size_t>(jj)];
                e1 = e1 - dot(e1, t) * t;
                e1 = (1.0 / e1.norm()) * e1;
                e[static_cast<size_t>(j)] = e1;
                const Su2Vector& tn = f.tangent[static_cast<size_t>((jj + 1) % n)];
                if (half_steps) {
                    const Su2Vector& tm = f.tangent_mid[static_cast<size_t>(jj)];
                    e1 = rotate_towards3(t, tm, e1);
                    e1 = rotate_towards3(tm, tn, e1);
                } else {
                    e1 = rotate_towards3(t, tn, e1);
                }
            }
            return e;
        };
        std::vector<Su2Vector> coarse = transport(false);
        std::vector<Su2Vector> fine = transport(true);
        for (int j = 0; j < 2 * n; ++j) {
            int jj = j % n;
            const Su2Vector& t = f.tangent[static_cast<size_t>(jj)];
            Su2Vector e1 = (1.0 / 3.0) * (4.0 * fine[static_cast<size_t>(j)] -
                                          coarse[static_cast<size_t>(j)]);
            e1 = e1 - dot(e1, t) * t;
            e1 = (1.0 / e1.norm()) * e1;
            Su2Vector e2 = cross(t, e1);
            raw[static_cast<size_t>(j)] = cplx(dot(f.dtangent[static_cast<size_t>(jj)], e1),
                                               dot(f.dtangent[static_cast<size_t>(jj)], e2));
        }
    } else {
        S3Fields f = s3_fields(curve);
        // covariant acceleration at 0: dT/dt + gamma (since <dT/dt, gamma> = -1)
        Vec4 acc0 = add4(f.dtangent[0], f.point[0]);
        Vec4 e0 = pick_normal4(f.point[0], f.tangent[0], acc0);

        auto step4 = [](const Vec4& p, const Vec4& t, const Vec4& pn, const Vec4& tn, Vec4 e) {
            Vec4 t_rot = rotate_towards4(p, pn, t);
            e = rotate_towards4(p, pn, e);
            return rotate_towards4(t_rot, tn, e);
        };
        auto transport = [&](bool half_steps) {
            std::vector<Vec4> e(static_cast<size_t>(2 * n));
            Vec4 e1 = e0;
            for (int j = 0; j < 2 * n; ++j) {
                int jj = j % n;
                const Vec4& p = f.point[static_cast<size_t>(jj)];
                const Vec4& t = f.tangent[static_cast<size_t>(jj)];
                e1 = axpy4(e1, -dot4(e1, p), p);
                e1 = axpy4(e1, -dot4(e1, t), t);
                e1 = scale4(1.0 / norm4(e1), e1);
                e[static_cast<size_t>(j)] = e1;
                int jn = (jj + 1) % n;
                const Vec4& pn = f.point[static_cast<size_t>(jn)];
                const Vec4& tn = f.tangent[static_cast<size_t>(jn)];
                if (half_steps) {
                    const Vec4& pm = f.point_mid[static_cast<size_t>(jj)];
                    const Vec4& tm = f.tangent_mid[static_cast<size_t>(jj)];
                    e1 = step4(p, t, pm, tm, e1);
                    e1 = step4(pm, tm, pn, tn, e1);
                } else {
                    e1 = step4(p, t, pn, tn, e1);
                }
            }
            return e;
        };
        std::vector<Vec4> coarse = transport(false);
        std::vector<Vec4> fine = transport(true);
        for (int j = 0; j < 2 * n; ++j) {
            int jj = j % n;
            const Vec4& p = f.point[static_cast<size_t>(jj)];
            const Vec4& t = f.tangent[static_cast<size_t>(jj)];
            Vec4 e1 = axpy4(scale4(4.0 / 3.0, fine[static_cast<size_t>(j)]), -1.0 / 3.0,
                            coarse[static_cast<size_t>(j)]);
            e1 = axpy4(e1, -dot4(e1, p), p);
            e1 = axpy4(e1, -dot4(e1, t), t);
            e1 = scale4(1.0 / norm4(e1), e1);
            Vec4 e2 = cross4(p, t, e1);
            raw[static_cast<size_t>(j)] = cplx(dot4(f.dtangent[static_cast<size_t>(jj)], e1),
                                               dot4(f.dtangent[static_cast<size_t>(jj)], e2));
        }
    }
    RegaugeResult rg = regauge(raw, curve.T, opt.regauge_tol);
    return rg.q;
}

CurveSamples reconstruct(const Potential& q, Space space, bool refined) {
    if (refined) {
        Potential fine = inverse_fourier(fourier(q, q.n() / 2 - 1), 2 * q.n(), q.T(), q.theta());
        CurveSamples coarse = reconstruct(q, space, false);
        CurveSamples dense = reconstruct(fine, space, false);
        for (int j = 0; j < coarse.n(); ++j) {
            if (space == Space::R3) {
                coarse.points_r3[static_cast<size_t>(j)] =
                    (1.0 / 3.0) * (4.0 * dense.points_r3[static_cast<size_t>(2 * j)] -
                                   coarse.points_r3[static_cast<size_t>(j)]);
                coarse.tangents_r3[static_cast<size_t>(j)] =
                    (1.0 / 3.0) * (4.0 * dense.tangents_r3[static_cast<size_t>(2 * j)] -
                                   coarse.tangents_r3[static_cast<size_t>(j)]);
            } else {
                Quat& p = coarse.points_s3[static_cast<size_t>(j)];
                const Quat& d = dense.points_s3[static_cast<size_t>(2 * j)];
                double nrm2 = 0.0;
                for (int c = 0; c < 4; ++c) {
                    p[static_cast<size_t>(c)] =
                        (4.0 * d[static_cast<size_t>(c)] - p[static_cast<size_t>(c)]) / 3.0;
                    nrm2 += p[static_cast<size_t>(c)] * p[static_cast<size_t>(c)];
                }
                double inv = 1.0 / std::sqrt(nrm2);
                for (int c = 0; c < 4; ++c) p[static_cast<size_t>(c)] *= inv;
            }
        }
        return coarse;
    }
    const int n = q.n();
    CurveSamples out;
    out.space = space;
    out.T = q.T();
    out.times.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) out.times[static_cast<size_t>(j)] = q.dt() * j;

    if (space == Space::R3) {
        FrameTrajectory traj = integrate_frame(q, q.theta(), true);
        out.points_r3.resize(static_cast<size_t>(n));
        out.tangents_r3.resize(static_cast<size_t>(n));
        for (int j = 0; j < n; ++j) {
            const Mat2& F = traj.frames[static_cast<size_t>(j)];
            const Mat2& dF = traj.dframes[static_cast<size_t>(j)];
            Mat2 Finv = inverse_unimodular(F);
            Mat2 G = 2.0 * (dF * Finv);
            out.points_r3[static_cast<size_t>(j)] = {G.a.imag(), G.b.real(), G.b.imag()};
            Mat2 Tm = F * eps * Finv;
            out.tangents_r3[static_cast<size_t>(j)] = {Tm.a.imag(), Tm.b.real(), Tm.b.imag()};
        }
    } else {
        FrameTrajectory f1, f2;
        parallel_for(2, [&](int i) {
            if (i == 0) {
                f1 = integrate_frame(q, 1.0 + q.theta(), false);
            } else {
                f2 = integrate_frame(q, -1.0 + q.theta(), false);
            }
        });
        out.points_s3.resize(static_cast<size_t>(n));
        out.tangents_s3.resize(static_cast<size_t>(n));
        for (int j = 0; j < n; ++j) {
            Mat2 F2inv = inverse_unimodular(f2.frames[static_cast<size_t>(j)]);
            Mat2 G = f1.frames[static_cast<size_t>(j)] * F2inv;
            out.points_s3[static_cast<size_t>(j)] = su2_to_quat(G);
            Mat2 Tm = f1.frames[static_cast<size_t>(j)] * eps * F2inv;
            out.tangents_s3[static_cast<size_t>(j)] = su2_to_quat(Tm);
        }
    }
    return out;
}

std::vector<Su2Vector> reconstruct_tangents_r3(const Potential& q) {
    return reconstruct(q, Space::R3).tangents_r3;
}

cplx mu_prime_stable(const Mat2& M, const Mat2& Mprime, int branch_sign) {
    EigenPair p = eigen_pair(M, branch_sign);
    if (!p.degenerate) {
        cplx num = p.w0 * (Mprime.a * p.v0 + Mprime.b * p.v1) +
                   p.w1 * (Mprime.c * p.v0 + Mprime.d * p.v1);
        return num / p.wtv;
    }
    // M ~ +-1: unitary diagonalization gives |mu'| = |M'|_F / sqrt(2).
    return cplx(0.0, norm_fro(Mprime) / std::numbers::sqrt2);
}

ClosingReport check_closing(const Potential& q, Space space, double tol) {
    ClosingReport rep;
    rep.space = space;
    rep.theta = q.theta();
    rep.tol = tol;
    const Mat2 I = Mat2::identity();

    if (space == Space::R3) {
        Monodromy m = monodromy(q, q.theta());
        cplx muv = mu_unitary(m.M, +1);
        rep.eta = (std::abs(muv - 1.0) <= std::abs(muv + 1.0)) ? +1 : -1;
        rep.mu_plus = muv;
        rep.mu_prime = mu_prime_stable(m.M, m.Mprime, +1);
        double eta = rep.eta;
        rep.mu_residual = std::max(std::abs(muv - eta), std::abs(rep.mu_prime));
        rep.matrix_residual = std::max(norm_fro(m.M - eta * I), norm_fro(m.Mprime));
        rep.frame_gap = norm_fro(m.M - eta * I);
        // gamma(T) - gamma(0) = 2 M' M^{-1}
        Mat2 G = 2.0 * (m.Mprime * inverse_unimodular(m.M));
        rep.endpoint_gap = Su2Vector{G.a.imag(), G.b.real(), G.b.imag()}.norm();
    } else {
        Monodromy m1 = monodromy(q, 1.0 + q.theta());
        Monodromy m2 = monodromy(q, -1.0 + q.theta());
        cplx mu1 = mu_unitary(m1.M, +1);
        cplx mu2 = mu_unitary(m2.M, +1);
        rep.eta = (std::abs(mu1 - 1.0) <= std::abs(mu1 + 1.0)) ? +1 : -1;
        rep.mu_plus = mu1;
        rep.mu_minus = mu2;
        double eta = rep.eta;
        rep.mu_residual = std::max(std::abs(mu1 - eta), std::abs(mu2 - eta));
        rep.matrix_residual = std::max(norm_fro(m1.M - eta * I), norm_fro(m2.M - eta * I));
        rep.frame_gap = rep.matrix_residual;
        Mat2 G = m1.M * inverse_unimodular(m2.M);
        Quat g = su2_to_quat(G);
        rep.endpoint_gap =
            std::sqrt((g[0] - 1.0) * (g[0] - 1.0) + g[1] * g[1] + g[2] * g[2] + g[3] * g[3]);
    }
    rep.closed = rep.mu_residual < tol;
    return rep;
}

namespace {

std::vector<std::vector<double>> curve_components(const CurveSamples& c) {
    const int n = c.n();
    if (c.space == Space::R3) {
        std::vector<std::vector<double>> comp(3, std::vector<double>(static_cast<size_t>(n)));
        for (int j = 0; j < n; ++j) {
            comp[0][static_cast<size_t>(j)] = c.points_r3[static_cast<size_t>(j)].x1;
            comp[1][static_cast<size_t>(j)] = c.points_r3[static_cast<size_t>(j)].x2;
            comp[2][static_cast<size_t>(j)] = c.points_r3[static_cast<size_t>(j)].x3;
        }
        return comp;
    }
    std::vector<std::vector<double>> comp(4, std::vector<double>(static_cast<size_t>(n)));
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < 4; ++i) {
            comp[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                c.points_s3[static_cast<size_t>(j)][static_cast<size_t>(i)];
        }
    }
    return comp;
}

std::vector<double> central_difference(const std::vector<double>& x, double h) {
    const int n = static_cast<int>(x.size());
    std::vector<double> d(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        d[static_cast<size_t>(j)] =
            (x[static_cast<size_t>((j + 1) % n)] - x[static_cast<size_t>((j - 1 + n) % n)]) /
            (2.0 * h);
    }
    return d;
}

// One-sided 5-point stencils for the derivatives at t = 0.  The forward
// stencil never touches the wrap seam, so a small endpoint gap of an
// almost-closed curve cannot contaminate the alignment frame.
template <typename V, typename Axpy, typename Scale>
void onesided_derivs(const std::vector<V>& pts, double h, Axpy axpy, Scale scale, V& d1, V& d2) {
    const double c1[5] = {-25.0, 48.0, -36.0, 16.0, -3.0};   // / (12 h)
    const double c2[5] = {35.0, -104.0, 114.0, -56.0, 11.0};  // / (12 h^2)
    d1 = scale(0.0, pts[0]);
    d2 = d1;
    for (int i = 0; i < 5; ++i) {
        d1 = axpy(d1, c1[i] / (12.0 * h), pts[static_cast<size_t>(i)]);
        d2 = axpy(d2, c2[i] / (12.0 * h * h), pts[static_cast<size_t>(i)]);
    }
}

void frame_at_zero_r3(const CurveSamples& c, Su2Vector& t0, Su2Vector& n0) {
    std::vector<Su2Vector> pts(c.points_r3.begin(), c.points_r3.begin() + 5);
    Su2Vector d1, d2;
    onesided_derivs(
        pts, c.dt(), [](const Su2Vector& a, double s, const Su2Vector& b) { return a + s * b; },
        [](double s, const Su2Vector& b) { return s * b; }, d1, d2);
    t0 = (1.0 / d1.norm()) * d1;
    n0 = pick_normal3(t0, d2);
}

void frame_at_zero_s3(const CurveSamples& c, Vec4& p0, Vec4& t0, Vec4& n0) {
    std::vector<Vec4> pts(c.points_s3.begin(), c.points_s3.begin() + 5);
    Vec4 d1, d2;
    onesided_derivs(
        pts, c.dt(), [](const Vec4& a, double s, const Vec4& b) { return axpy4(a, s, b); },
        [](double s, const Vec4& b) { return scale4(s, b); }, d1, d2);
    p0 = c.points_s3[0];
    d1 = axpy4(d1, -dot4(d1, p0), p0);
    t0 = scale4(1.0 / norm4(d1), d1);
    n0 = pick_normal4(p0, t0, d2);
}

Quat quat_from_rotation(const double R[3][3]) {
    // Shepperd's method
    double tr = R[0][0] + R[1][1] + R[2][2];
    Quat q;
    if (tr > 0.0) {
        double s = std::sqrt(tr + 1.0) * 2.0;
        q = {0.25 * s, (R[2][1] - R[1][2]) / s, (R[0][2] - R[2][0]) / s,
             (R[1][0] - R[0][1]) / s};
    } else if (R[0][0] > R[1][1] && R[0][0] > R[2][2]) {
        double s = std::sqrt(1.0 + R[0][0] - R[1][1] - R[2][2]) * 2.0;
        q = {(R[2][1] - R[1][2]) / s, 0.25 * s, (R[0][1] + R[1][0]) / s,
             (R[0][2] + R[2][0]) / s};
    } else if (R[1][1] > R[2][2]) {
        double s = std::sqrt(1.0 + R[1][1] - R[0][0] - R[2][2]) * 2.0;
        q = {(R[0][2] - R[2][0]) / s, (R[0][1] + R[1][0]) / s, 0.25 * s,
             (R[1][2] + R[2][1]) / s};
    } else {
        double s = std::sqrt(1.0 + R[2][2] - R[0][0] - R[1][1]) * 2.0;
        q = {(R[1][0] - R[0][1]) / s, (R[0][2] + R[2][0]) / s, (R[1][2] + R[2][1]) / s,
             0.25 * s};
    }
    double nrm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    for (auto& v : q) v /= nrm;
    return q;
}

// R maps the frame (t2, n2, t2 x n2) onto (t1, n1, t1 x n1).
void rotation_between_frames(const Su2Vector& t1, const Su2Vector& n1, const Su2Vector& t2,
                             const Su2Vector& n2, double R[3][3]) {
    Su2Vector b1 = cross(t1, n1);
    Su2Vector b2 = cross(t2, n2);
    const Su2Vector A[3] = {t1, n1, b1};
    const Su2Vector B[3] = {t2, n2, b2};
    double a[3][3] = {{A[0].x1, A[1].x1, A[2].x1},
                      {A[0].x2, A[1].x2, A[2].x2},
                      {A[0].x3, A[1].x3, A[2].x3}};
    double bt[3][3] = {{B[0].x1, B[0].x2, B[0].x3},
                       {B[1].x1, B[1].x2, B[1].x3},
                       {B[2].x1, B[2].x2, B[2].x3}};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            R[i][j] = a[i][0] * bt[0][j] + a[i][1] * bt[1][j] + a[i][2] * bt[2][j];
        }
    }
}

Su2Vector apply_rot(const double R[3][3], const Su2Vector& x) {
    return {R[0][0] * x.x1 + R[0][1] * x.x2 + R[0][2] * x.x3,
            R[1][0] * x.x1 + R[1][1] * x.x2 + R[1][2] * x.x3,
            R[2][0] * x.x1 + R[2][1] * x.x2 + R[2][2] * x.x3};
}

}  // namespace

double sobolev_distance(const CurveSamples& c1, const CurveSamples& c2, int order, bool align) {
    if (c1.space != c2.space || c1.n() != c2.n() || std::abs(c1.T - c2.T) > 1e-12 * c1.T) {
        fail(ErrorKind::Domain, "sobolev_distance: grid or space mismatch");
    }
    if (order < 0 || order > 2) {
        fail(ErrorKind::Domain, "sobolev_distance: order must be 0, 1 or 2");
    }
    CurveSamples c2a = align ? align_to(c1, c2) : c2;

    auto a = curve_components(c1);
    auto b = curve_components(c2a);
    const int n = c1.n();
    const double h = c1.dt();

    double total = 0.0;
    std::vector<std::vector<double>> diff(a.size(), std::vector<double>(static_cast<size_t>(n)));
    for (size_t c = 0; c < a.size(); ++c) {
        for (int j = 0; j < n; ++j) {
            diff[c][static_cast<size_t>(j)] =
                a[c][static_cast<size_t>(j)] - b[c][static_cast<size_t>(j)];
        }
    }
    for (int m = 0; m <= order; ++m) {
        double acc = 0.0;
        for (size_t c = 0; c < diff.size(); ++c) {
            for (int j = 0; j < n; ++j) {
                acc += diff[c][static_cast<size_t>(j)] * diff[c][static_cast<size_t>(j)];
            }
        }
        total += acc * h;
        if (m < order) {
            for (size_t c = 0; c < diff.size(); ++c) diff[c] = central_difference(diff[c], h);
        }
    }
    return std::sqrt(total);
}

CurveSamples align_to(const CurveSamples& reference, const CurveSamples& c) {
    if (reference.space != c.space) {
        fail(ErrorKind::Domain, "align_to: space mismatch");
    }
    CurveSamples out = c;
    if (c.space == Space::R3) {
        Su2Vector t1, n1, t2, n2;
        frame_at_zero_r3(reference, t1, n1);
        frame_at_zero_r3(c, t2, n2);
        double R[3][3];
        rotation_between_frames(t1, n1, t2, n2, R);
        Su2Vector p1 = reference.points_r3[0];
        Su2Vector p2 = c.points_r3[0];
        for (int j = 0; j < c.n(); ++j) {
            out.points_r3[static_cast<size_t>(j)] =
                p1 + apply_rot(R, c.points_r3[static_cast<size_t>(j)] - p2);
        }
    } else {
        Vec4 p1, t1, n1, p2, t2, n2;
        frame_at_zero_s3(reference, p1, t1, n1);
        frame_at_zero_s3(c, p2, t2, n2);
        Mat2 u1 = quat_to_su2(p1);
        Mat2 u2 = quat_to_su2(p2);
        // tangents/normals left-translated to the identity are pure quaternions
        auto to_su2vec = [](const Mat2& U, const Vec4& v) {
            Mat2 X = inverse_unimodular(U) * quat_to_su2(v);
            return Su2Vector{X.a.imag(), X.b.real(), X.b.imag()};
        };
        Su2Vector vt1 = to_su2vec(u1, t1), vn1 = to_su2vec(u1, n1);
        Su2Vector vt2 = to_su2vec(u2, t2), vn2 = to_su2vec(u2, n2);
        double R[3][3];
        rotation_between_frames(vt1, vn1, vt2, vn2, R);
        Mat2 k = quat_to_su2(quat_from_rotation(R));
        // gamma |-> (u1 k u2^{-1}) gamma k^{-1}
        Mat2 g = u1 * k * inverse_unimodular(u2);
        Mat2 kinv = inverse_unimodular(k);
        for (int j = 0; j < c.n(); ++j) {
            Mat2 G = g * quat_to_su2(c.points_s3[static_cast<size_t>(j)]) * kinv;
            out.points_s3[static_cast<size_t>(j)] = su2_to_quat(G);
        }
    }
    return out;
}

}  // namespace gapcurve
