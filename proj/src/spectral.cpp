#include "gapcurve/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gapcurve/error.hpp"

namespace gapcurve {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// Monodromy without the lambda-derivative (cheaper, used by winding scans).
Mat2 monodromy_matrix(const Potential& q, cplx lambda) {
    const int n = q.n();
    const double h = q.dt();
    Mat2 F = Mat2::identity();
    for (int j = 0; j < n; ++j) {
        F = F * exp_traceless(h * alpha_of(q.midpoint(j), lambda));
    }
    return F;
}

struct FVal {
    cplx f;   // a - d
    cplx fp;  // a' - d'
};

FVal eval_f(const Potential& q, cplx lambda) {
    Monodromy m = monodromy(q, lambda);
    return {m.M.a - m.M.d, m.Mprime.a - m.Mprime.d};
}

cplx eval_f_only(const Potential& q, cplx lambda) {
    Mat2 M = monodromy_matrix(q, lambda);
    return M.a - M.d;
}

struct NearZeroOnBoundary {};

// Closed-contour scan of f = a - d with adaptive phase tracking: segments
// are bisected until arg f turns by < pi/2 between neighbours, so the
// winding number is read off exactly.  Values of |f| near zero on the
// contour abort the scan; the caller moves the contour.
class ContourScan {
public:
    ContourScan(const Potential& q, ParallelMode mode) : q_(q), mode_(mode) {}

    // loop: closed polyline, first point not repeated at the end.
    void run(const std::vector<cplx>& loop) {
        zs_.clear();
        fs_.clear();
        const int m = static_cast<int>(loop.size());
        std::vector<cplx> fv(static_cast<size_t>(m));
        parallel_for(
            m,
            [&](int i) {
                fv[static_cast<size_t>(i)] = eval_f_only(q_, loop[static_cast<size_t>(i)]);
            },
            mode_);
        for (int i = 0; i < m; ++i) {
            check_floor(fv[static_cast<size_t>(i)], loop[static_cast<size_t>(i)]);
            zs_.push_back(loop[static_cast<size_t>(i)]);
            fs_.push_back(fv[static_cast<size_t>(i)]);
        }
        refine();
    }

    int winding() const {
        double acc = 0.0;
        const size_t m = zs_.size();
        for (size_t i = 0; i < m; ++i) {
            acc += std::arg(fs_[(i + 1) % m] * std::conj(fs_[i]));
        }
        double turns = acc / two_pi;
        double r = std::round(turns);
        if (std::abs(turns - r) > 0.25) {
            fail(ErrorKind::Resolution, "contour winding is not close to an integer; increase n");
        }
        return static_cast<int>(r);
    }

    // First moment of the zero-counting measure, (1/2 pi i) oint z f'/f dz,
    // trapezoid over the refined polyline (already dense near the poles).
    cplx first_moment() const {
        const size_t m = zs_.size();
        std::vector<cplx> g(m);
        parallel_for(
            static_cast<int>(m),
            [&](int i) {
                FVal v = eval_f(q_, zs_[static_cast<size_t>(i)]);
                g[static_cast<size_t>(i)] = zs_[static_cast<size_t>(i)] * v.fp / v.f;
            },
            mode_);
        cplx acc = 0.0;
        for (size_t i = 0; i < m; ++i) {
            size_t j = (i + 1) % m;
            acc += 0.5 * (g[i] + g[j]) * (zs_[j] - zs_[i]);
        }
        return acc / cplx(0.0, two_pi);
    }

private:
    // Pointwise noise floor: the integration error of f = a - d scales
    // with the local monodromy magnitude e^{T |Im lambda| / 2}.
    void check_floor(const cplx& f, const cplx& z) const {
        double mag = std::exp(std::min(700.0, 0.5 * q_.T() * std::abs(z.imag())));
        if (std::abs(f) < 1e-13 * (1.0 + mag)) throw NearZeroOnBoundary{};
    }

    // Midpoint-verified refinement: a segment is accepted only when the
    // phase increments of both halves are small and compose consistently.
    // This catches near-2pi swings between samples (a high-multiplicity
    // zero just outside the contour) that plain step tracking aliases away.
    void refine() {
        std::vector<cplx> zs_out, fs_out;
        const size_t m = zs_.size();
        zs_out.reserve(2 * m);
        fs_out.reserve(2 * m);
        for (size_t i = 0; i < m; ++i) {
            const size_t j = (i + 1) % m;
            zs_out.push_back(zs_[i]);
            fs_out.push_back(fs_[i]);
            refine_segment(zs_[i], fs_[i], zs_[j], fs_[j], zs_out, fs_out, 0);
        }
        zs_ = std::move(zs_out);
        fs_ = std::move(fs_out);
    }

    void refine_segment(cplx z0, cplx f0, cplx z1, cplx f1, std::vector<cplx>& out_z,
                        std::vector<cplx>& out_f, int depth) {
        if (depth > 42) {
            fail(ErrorKind::Resolution, "contour refinement did not terminate");
        }
        cplx zm = 0.5 * (z0 + z1);
        cplx fm = eval_f_only(q_, zm);
        check_floor(fm, zm);
        double s1 = std::arg(fm * std::conj(f0));
        double s2 = std::arg(f1 * std::conj(fm));
        if (std::abs(s1) <= 0.9 && std::abs(s2) <= 0.9 && std::abs(s1 + s2) <= 2.9) {
            return;  // verified; the single-step increment equals s1 + s2
        }
        refine_segment(z0, f0, zm, fm, out_z, out_f, depth + 1);
        out_z.push_back(zm);
        out_f.push_back(fm);
        refine_segment(zm, fm, z1, f1, out_z, out_f, depth + 1);
    }

    const Potential& q_;
    ParallelMode mode_;
    std::vector<cplx> zs_;
    std::vector<cplx> fs_;
};

std::vector<cplx> circle_loop(cplx center, double radius, int m) {
    std::vector<cplx> loop(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        double a = two_pi * i / m;
        loop[static_cast<size_t>(i)] = center + radius * cplx(std::cos(a), std::sin(a));
    }
    return loop;
}

// The initial sampling density tracks the vacuum phase rate T/2 per unit
// length (target ~0.5 rad per step); adaptive refinement handles the rest.
std::vector<cplx> rect_loop(double re0, double re1, double im0, double im1, double T) {
    std::vector<cplx> loop;
    auto edge = [&](cplx from, cplx to) {
        double len = std::abs(to - from);
        int per_edge = std::max(8, static_cast<int>(std::ceil(len * T)));
        for (int i = 0; i < per_edge; ++i) {
            double s = static_cast<double>(i) / per_edge;
            loop.push_back(from + s * (to - from));
        }
    };
    edge(cplx(re0, im0), cplx(re1, im0));
    edge(cplx(re1, im0), cplx(re1, im1));
    edge(cplx(re1, im1), cplx(re0, im1));
    edge(cplx(re0, im1), cplx(re0, im0));
    return loop;
}

struct LocatedZero {
    cplx lambda;
    int mult;
};

// Recursive bisection of a rectangle guided by winding counts; isolated
// zeros are extracted from the first contour moment and Newton-polished,
// clusters smaller than cluster_tol are reported with their multiplicity.
class CentralExtractor {
public:
    CentralExtractor(const Potential& q, ParallelMode mode) : q_(q), mode_(mode) {}

    // Appends zeros (with multiplicity) found in the box; returns the count.
    // Throws NearZeroOnBoundary if a zero sits on the supplied boundary.
    int extract(double re0, double re1, double im0, double im1,
                std::vector<LocatedZero>& out, int depth = 0) {
        if (depth > 60) {
            fail(ErrorKind::Resolution, "central zero extraction: subdivision too deep");
        }
        ContourScan scan(q_, mode_);
        scan.run(rect_loop(re0, re1, im0, im1, q_.T()));
        int w = scan.winding();
        if (w == 0) return 0;
        if (w < 0) {
            fail(ErrorKind::Resolution, "negative winding encountered (a - d is analytic)");
        }

        double width = re1 - re0, height = im1 - im0;
        if (w == 1) {
            cplx seed = scan.first_moment();
            cplx z = newton_polish(seed, 1);
            double mre = 0.1 * width, mim = 0.1 * height;
            if (z.real() < re0 - mre || z.real() > re1 + mre || z.imag() < im0 - mim ||
                z.imag() > im1 + mim) {
                z = seed;
            }
            out.push_back({z, 1});
            return 1;
        }
        if (std::max(width, height) < cluster_tol_) {
            cplx centroid = scan.first_moment() / static_cast<double>(w);
            cplx z = newton_polish(centroid, w);
            if (std::abs(z - centroid) > 2.0 * std::max(width, height)) z = centroid;
            out.push_back({z, w});
            return w;
        }

        bool split_re = (width >= height);
        for (int attempt = 0; attempt < 7; ++attempt) {
            double frac = 0.5 + 0.089 * attempt;
            size_t mark = out.size();
            try {
                int na, nb;
                if (split_re) {
                    double c = re0 + frac * width;
                    na = extract(re0, c, im0, im1, out, depth + 1);
                    nb = extract(c, re1, im0, im1, out, depth + 1);
                } else {
                    double c = im0 + frac * height;
                    na = extract(re0, re1, im0, c, out, depth + 1);
                    nb = extract(re0, re1, c, im1, out, depth + 1);
                }
                if (na + nb != w) {
                    fail(ErrorKind::Resolution,
                         "central zero extraction: subdivision lost zeros; increase n");
                }
                return w;
            } catch (const NearZeroOnBoundary&) {
                out.resize(mark);  // a zero sat on the split line; nudge it
                continue;
            }
        }
        fail(ErrorKind::Resolution, "central zero extraction: could not place a split line");
    }

private:
    // Damped multiplicity-aware Newton on f = a - d.
    cplx newton_polish(cplx z, int mult) {
        FVal v = eval_f(q_, z);
        for (int it = 0; it < 40; ++it) {
            if (std::abs(v.fp) == 0.0) break;
            cplx step = static_cast<double>(mult) * v.f / v.fp;
            if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(z))) break;
            cplx znew = z - step;
            FVal vnew = eval_f(q_, znew);
            int halvings = 0;
            while (std::abs(vnew.f) > std::abs(v.f) && halvings < 8) {
                step *= 0.5;
                znew = z - step;
                vnew = eval_f(q_, znew);
                ++halvings;
            }
            if (std::abs(vnew.f) >= std::abs(v.f)) break;
            z = znew;
            v = vnew;
        }
        return z;
    }

    const Potential& q_;
    ParallelMode mode_;
    double cluster_tol_{1e-3};
};

// Damped Newton for one tail zero seeded at the lattice point.
// Converged when |f| < 1e-10 |f'| * (2 pi / T).
bool tail_newton(const Potential& q, double seed, cplx& out) {
    const double scale = two_pi / q.T();
    cplx z = seed;
    FVal v = eval_f(q, z);
    for (int it = 0; it < 50; ++it) {
        if (std::abs(v.f) < 1e-10 * std::abs(v.fp) * scale) {
            out = z;
            return true;
        }
        if (std::abs(v.fp) == 0.0) return false;
        cplx step = v.f / v.fp;
        cplx znew = z - step;
        FVal vnew = eval_f(q, znew);
        int halvings = 0;
        while (std::abs(vnew.f) > std::abs(v.f) && halvings < 8) {
            step *= 0.5;
            znew = z - step;
            vnew = eval_f(q, znew);
            ++halvings;
        }
        z = znew;
        v = vnew;
    }
    out = z;
    return std::abs(v.f) < 1e-8 * std::abs(v.fp) * scale;
}

// Contour fallback for one tail index: a box around the lattice point of
// half-width pi/(2T) (a quarter of the lattice spacing), grown on retry.
cplx tail_contour(const Potential& q, double seed, ParallelMode mode) {
    const double delta = 0.5 * std::numbers::pi / q.T();
    for (int attempt = 0; attempt < 4; ++attempt) {
        double r = std::min(delta * (1.0 + 0.6 * attempt), 0.98 * std::numbers::pi / q.T());
        try {
            CentralExtractor ex(q, mode);
            std::vector<LocatedZero> zs;
            int w = ex.extract(seed - r, seed + r, -r, r, zs);
            if (w >= 1) {
                cplx best = zs.front().lambda;
                for (const auto& z : zs) {
                    if (std::abs(z.lambda - seed) < std::abs(best - seed)) best = z.lambda;
                }
                return best;
            }
        } catch (const NearZeroOnBoundary&) {
        }
    }
    fail(ErrorKind::Resolution, "tail zero near the lattice could not be located; increase n");
}

}  // namespace

cplx trace_delta(const Potential& q, cplx lambda) {
    return monodromy_matrix(q, lambda).trace();
}

cplx mu_of_delta(cplx delta, int branch_sign) {
    cplx disc = std::sqrt((delta - 2.0) * (delta + 2.0));
    return 0.5 * (delta + static_cast<double>(branch_sign) * disc);
}

cplx mu(const Potential& q, cplx lambda, int branch_sign) {
    return mu_of_delta(trace_delta(q, lambda), branch_sign);
}

cplx mu_unitary(const Mat2& M, int branch_sign) {
    // M = cos(phi) 1 + sin(phi) U with U traceless, U^2 = -1, |U|_F = sqrt(2)
    double c = 0.5 * M.trace().real();
    Mat2 rest = M - cplx(c) * Mat2::identity();
    double snorm = norm_fro(rest) / std::numbers::sqrt2;
    // renormalize onto the unit circle
    double r = std::hypot(c, snorm);
    if (r == 0.0) return 1.0;
    return cplx(c / r, branch_sign * snorm / r);
}

std::vector<double> SpectralData::abs_z() const {
    std::vector<double> out(entries.size());
    for (size_t i = 0; i < entries.size(); ++i) out[i] = std::abs(entries[i].z);
    return out;
}

int default_K_central(const Potential& q) {
    double bound = 2.0 * (q.l2_norm() + 1.0);
    int K = 1;
    while (lattice_point(q.T(), K) <= bound) ++K;
    return K;
}

SpectralData locate_lambda_k(const Potential& q, int K, ParallelMode mode) {
    const double T = q.T();
    const int Kc = default_K_central(q);
    if (K < Kc) {
        fail(ErrorKind::Domain,
             "locate_lambda_k: K must be at least K_central = " + std::to_string(Kc));
    }
    if (lattice_point(T, K) + std::numbers::pi / T > lambda_resolution_bound(q)) {
        fail(ErrorKind::Resolution, "locate_lambda_k: K exceeds the grid resolution bound");
    }

    // Big-circle count on |lambda| = (lambda_{Kc,0} + lambda_{Kc+1,0}) / 2.
    const double Rc = 0.5 * (lattice_point(T, Kc) + lattice_point(T, Kc + 1));
    const int expected = 2 * Kc + 1;
    {
        int circle_count = -1;
        for (int attempt = 0; attempt < 4; ++attempt) {
            try {
                ContourScan scan(q, mode);
                double r = Rc * (1.0 + 0.003 * attempt);
                int m = std::max(64, static_cast<int>(std::ceil(2.0 * std::numbers::pi * r * T)));
                scan.run(circle_loop(0.0, r, m));
                circle_count = scan.winding();
                break;
            } catch (const NearZeroOnBoundary&) {
                continue;
            }
        }
        if (circle_count != expected) {
            fail(ErrorKind::Resolution,
                 "central zero count " + std::to_string(circle_count) + " does not match " +
                     std::to_string(expected) + "; increase n");
        }
    }

    // Extract the central zeros from the matching square.
    std::vector<LocatedZero> central;
    {
        bool done = false;
        double r = Rc;
        for (int attempt = 0; attempt < 6 && !done; ++attempt, r *= 1.004) {
            try {
                central.clear();
                CentralExtractor ex(q, mode);
                int w = ex.extract(-r, r, -r, r, central);
                if (w != expected) {
                    fail(ErrorKind::Resolution,
                         "central square count does not match the circle count; increase n");
                }
                done = true;
            } catch (const NearZeroOnBoundary&) {
                continue;
            }
        }
        if (!done) {
            fail(ErrorKind::Resolution, "central square boundary kept hitting zeros; increase n");
        }
    }

    std::sort(central.begin(), central.end(), [](const LocatedZero& x, const LocatedZero& y) {
        if (x.lambda.real() != y.lambda.real()) return x.lambda.real() < y.lambda.real();
        return x.lambda.imag() < y.lambda.imag();
    });

    SpectralData sd;
    sd.K = K;
    sd.K_central = Kc;
    sd.T = T;
    sd.theta = q.theta();
    sd.entries.resize(static_cast<size_t>(2 * K + 1));

    int k = -Kc;
    for (const LocatedZero& z : central) {
        for (int r = 0; r < z.mult; ++r) {
            if (k > Kc) fail(ErrorKind::Resolution, "central enumeration overflow");
            sd.at(k) = SpectralEntry{k, z.lambda, z.mult, 0.0};
            ++k;
        }
    }
    if (k != Kc + 1) fail(ErrorKind::Resolution, "central enumeration underflow");

    // Tail indices: Newton seeded at the lattice, contour fallback.
    std::vector<int> tail;
    for (int kk = Kc + 1; kk <= K; ++kk) {
        tail.push_back(kk);
        tail.push_back(-kk);
    }
    parallel_for(
        static_cast<int>(tail.size()),
        [&](int i) {
            int kk = tail[static_cast<size_t>(i)];
            double seed = lattice_point(T, kk);
            cplx z;
            if (!tail_newton(q, seed, z) || std::abs(z - seed) >= std::numbers::pi / T) {
                z = tail_contour(q, seed, ParallelMode::Serial);
            }
            if (std::abs(z - seed) >= std::numbers::pi / T) {
                fail(ErrorKind::Resolution,
                     "tail zero escaped its lattice disk at k = " + std::to_string(kk));
            }
            sd.at(kk) = SpectralEntry{kk, z, 1, 0.0};
        },
        mode);

    return sd;
}

void fill_z(const Potential& q, SpectralData& sd, ParallelMode mode) {
    parallel_for(
        2 * sd.K + 1,
        [&](int i) {
            SpectralEntry& e = sd.entries[static_cast<size_t>(i)];
            Mat2 M = monodromy_matrix(q, e.lambda);
            double sign = (e.k % 2 == 0) ? 2.0 : -2.0;
            e.z = sign * M.b;
        },
        mode);
}

SpectralData perturbed_fourier(const Potential& q, int K, ParallelMode mode) {
    SpectralData sd = locate_lambda_k(q, K, mode);
    fill_z(q, sd, mode);
    return sd;
}

DiagnosticsReport asymptotic_diagnostics(const Potential& q, int K,
                                         std::vector<cplx> ratio_grid, ParallelMode mode) {
    DiagnosticsReport rep;
    rep.K = K;
    rep.d.resize(static_cast<size_t>(2 * K + 1));
    parallel_for(
        2 * K + 1,
        [&](int i) {
            int k = i - K;
            cplx l0 = lattice_point(q.T(), k);
            Mat2 M = monodromy_matrix(q, l0);
            rep.d[static_cast<size_t>(i)] = norm_rowsum(M - vacuum_monodromy(q.T(), l0));
        },
        mode);

    rep.partial_l2.resize(static_cast<size_t>(K + 1));
    double acc = rep.d[static_cast<size_t>(K)] * rep.d[static_cast<size_t>(K)];
    rep.partial_l2[0] = std::sqrt(acc);
    for (int k = 1; k <= K; ++k) {
        acc += rep.d[static_cast<size_t>(K + k)] * rep.d[static_cast<size_t>(K + k)];
        acc += rep.d[static_cast<size_t>(K - k)] * rep.d[static_cast<size_t>(K - k)];
        rep.partial_l2[static_cast<size_t>(k)] = std::sqrt(acc);
    }
    rep.total_l2 = rep.partial_l2.back();

    if (ratio_grid.empty()) {
        double top = std::min(0.8 * lambda_resolution_bound(q), 4.0 * lattice_point(q.T(), K));
        for (int j = 1; j <= 8; ++j) {
            double x = top * j / 8.0;
            ratio_grid.push_back(x);
            ratio_grid.push_back(cplx(x, 2.0 / q.T()));
        }
    }
    rep.ratio_lambda = ratio_grid;
    rep.ratio.resize(ratio_grid.size());
    parallel_for(
        static_cast<int>(ratio_grid.size()),
        [&](int i) {
            cplx l = rep.ratio_lambda[static_cast<size_t>(i)];
            Mat2 M = monodromy_matrix(q, l);
            Mat2 M0 = vacuum_monodromy(q.T(), l);
            rep.ratio[static_cast<size_t>(i)] = norm_rowsum(M - M0) / norm_rowsum(M0);
        },
        mode);
    return rep;
}

FiniteGapVerdict is_finite_gap(const SpectralData& sd, double tol_rel, double tol_abs) {
    FiniteGapVerdict v;
    double zmax = 0.0;
    for (const auto& e : sd.entries) zmax = std::max(zmax, std::abs(e.z));
    v.tol = tol_rel * zmax + tol_abs;
    int worst = 0;
    for (const auto& e : sd.entries) {
        if (std::abs(e.z) >= v.tol) {
            v.gap_indices.push_back(e.k);
            worst = std::max(worst, std::abs(e.k));
        }
    }
    v.K0 = worst;
    v.finite_gap = worst < sd.K;
    return v;
}

}  // namespace gapcurve
