#include "gapcurve/potential.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gapcurve/error.hpp"

namespace gapcurve {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey, sign = -1 forward.
void fft_radix2(std::vector<cplx>& a, int sign) {
    size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        double ang = sign * two_pi / static_cast<double>(len);
        cplx wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            cplx w(1.0);
            for (size_t k = 0; k < len / 2; ++k) {
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

std::vector<cplx> dft_direct(std::span<const cplx> x, int sign) {
    size_t n = x.size();
    std::vector<cplx> out(n);
    for (size_t k = 0; k < n; ++k) {
        cplx acc = 0.0;
        for (size_t j = 0; j < n; ++j) {
            double ang = sign * two_pi * static_cast<double>(j * k % n) / static_cast<double>(n);
            acc += x[j] * cplx(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

// Band-limited samples at t_{j+1/2} from samples at t_j: twist the
// discrete spectrum by a half-sample phase.  The Nyquist mode is split
// evenly between +n/2 and -n/2.
std::vector<cplx> half_shift(const std::vector<cplx>& x) {
    const size_t n = x.size();
    std::vector<cplx> X = fft_forward(x);
    for (size_t m = 0; m < n; ++m) {
        // signed frequency in [-n/2, n/2)
        double k = (m <= n / 2) ? static_cast<double>(m)
                                : static_cast<double>(m) - static_cast<double>(n);
        if (m == n / 2) {
            // cos part only: average of the two Nyquist phases
            X[m] *= std::cos(std::numbers::pi * k / static_cast<double>(n));
            continue;
        }
        double ang = two_pi * k * 0.5 / static_cast<double>(n);
        X[m] *= cplx(std::cos(ang), std::sin(ang));
    }
    std::vector<cplx> y = fft_inverse(X);
    return y;
}

}  // namespace

std::vector<cplx> fft_forward(std::span<const cplx> x) {
    if (is_pow2(x.size())) {
        std::vector<cplx> a(x.begin(), x.end());
        fft_radix2(a, -1);
        return a;
    }
    return dft_direct(x, -1);
}

std::vector<cplx> fft_inverse(std::span<const cplx> X) {
    size_t n = X.size();
    std::vector<cplx> a;
    if (is_pow2(n)) {
        a.assign(X.begin(), X.end());
        fft_radix2(a, +1);
    } else {
        a = dft_direct(X, +1);
    }
    double s = 1.0 / static_cast<double>(n);
    for (auto& v : a) v *= s;
    return a;
}

Potential::Potential(std::vector<cplx> samples, double T, double theta)
    : samples_(std::move(samples)), T_(T), theta_(theta) {
    if (T_ <= 0.0) fail(ErrorKind::Domain, "Potential: period must be positive");
    int n = static_cast<int>(samples_.size());
    if (n < 8 || n % 2 != 0) {
        fail(ErrorKind::Domain, "Potential: grid size must be even and >= 8");
    }
    midpoints_ = half_shift(samples_);
}

double Potential::l2_norm() const {
    double acc = 0.0;
    for (const cplx& v : samples_) acc += std::norm(v);
    return std::sqrt(acc * dt());
}

FourierSeq fourier(const Potential& q, int K) {
    if (K < 0 || K > q.n() / 2 - 1) {
        fail(ErrorKind::Domain, "fourier: K out of range (need 0 <= K <= n/2 - 1)");
    }
    const int n = q.n();
    std::vector<cplx> X = fft_forward(q.samples());
    // X[m] = sum_j q_j exp(-2 pi i j m / n); coefficient q^(k) is the
    // trapezoid value (T/n) * X[(-k) mod n] because of the + sign in the
    // defining integral.
    FourierSeq out;
    out.K = K;
    out.coeff.resize(static_cast<size_t>(2 * K + 1));
    for (int k = -K; k <= K; ++k) {
        int m = ((-k) % n + n) % n;
        out(k) = q.dt() * X[static_cast<size_t>(m)];
    }
    return out;
}

Potential inverse_fourier(const FourierSeq& c, int n, double T, double theta) {
    if (c.K > n / 2 - 1) {
        fail(ErrorKind::Domain, "inverse_fourier: K out of range for target grid");
    }
    std::vector<cplx> X(static_cast<size_t>(n), cplx(0.0));
    for (int k = -c.K; k <= c.K; ++k) {
        int m = ((-k) % n + n) % n;
        X[static_cast<size_t>(m)] = c(k) * static_cast<double>(n) / T;
    }
    return Potential(fft_inverse(X), T, theta);
}

double l2_norm(const Potential& q) { return q.l2_norm(); }

double l2_distance(const Potential& q1, const Potential& q2) {
    if (q1.n() != q2.n() || q1.T() != q2.T()) {
        fail(ErrorKind::Domain, "l2_distance: grid mismatch");
    }
    double acc = 0.0;
    for (int j = 0; j < q1.n(); ++j) acc += std::norm(q1.sample(j) - q2.sample(j));
    return std::sqrt(acc * q1.dt());
}

double l2_distance_mod_phase(const Potential& q1, const Potential& q2) {
    if (q1.n() != q2.n() || q1.T() != q2.T()) {
        fail(ErrorKind::Domain, "l2_distance: grid mismatch");
    }
    // min over phi of ||q1 - e^{i phi} q2||: phi = arg <q1, q2>.
    cplx inner = 0.0;
    for (int j = 0; j < q1.n(); ++j) inner += q1.sample(j) * std::conj(q2.sample(j));
    cplx phase = (std::abs(inner) > 0.0) ? inner / std::abs(inner) : cplx(1.0);
    double acc = 0.0;
    for (int j = 0; j < q1.n(); ++j) acc += std::norm(q1.sample(j) - phase * q2.sample(j));
    return std::sqrt(acc * q1.dt());
}

RegaugeResult regauge(std::span<const cplx> raw, double T, double defect_tol) {
    if (raw.size() % 2 != 0 || raw.size() < 16) {
        fail(ErrorKind::Domain, "regauge: need an even number (>= 16) of samples over two periods");
    }
    const int n = static_cast<int>(raw.size() / 2);
    const double h = T / n;

    double maxabs = 0.0;
    for (const cplx& v : raw) maxabs = std::max(maxabs, std::abs(v));

    double theta = 0.0;
    if (maxabs > 0.0) {
        const double floor = 0.01 * maxabs;
        // Unwrap arg(raw) along the samples; increments below the modulus
        // floor carry no phase information and are taken as zero.
        std::vector<double> argu(raw.size(), 0.0);
        for (size_t j = 1; j < raw.size(); ++j) {
            double inc = 0.0;
            if (std::abs(raw[j]) > floor && std::abs(raw[j - 1]) > floor) {
                inc = std::arg(raw[j] * std::conj(raw[j - 1]));
            }
            argu[j] = argu[j - 1] + inc;
        }
        // Average the cross-period phase difference over usable samples.
        double acc = 0.0;
        int cnt = 0;
        for (int j = 0; j < n; ++j) {
            if (std::abs(raw[j]) > floor && std::abs(raw[j + n]) > floor) {
                acc += argu[j + n] - argu[j];
                ++cnt;
            }
        }
        if (cnt > 0) {
            double winding_phase = acc / cnt;  // estimate of theta*T incl. windings
            // Anchor the branch to the measured holonomy ratio.
            cplx ratio = 0.0;
            for (int j = 0; j < n; ++j) ratio += raw[j + n] * std::conj(raw[j]);
            double base = std::arg(ratio);  // theta*T mod 2pi, in (-pi, pi]
            double k = std::round((winding_phase - base) / two_pi);
            theta = (base + two_pi * k) / T;
        }
    }

    std::vector<cplx> q(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        double t = h * j;
        q[static_cast<size_t>(j)] = raw[j] * cplx(std::cos(theta * t), -std::sin(theta * t));
    }
    // Periodicity defect of the regauged second period.
    double defect = 0.0;
    for (int j = 0; j < n; ++j) {
        double t = h * (j + n);
        cplx q2 = raw[j + n] * cplx(std::cos(theta * t), -std::sin(theta * t));
        defect = std::max(defect, std::abs(q2 - q[static_cast<size_t>(j)]));
    }
    if (defect > defect_tol * std::max(1.0, maxabs)) {
        fail(ErrorKind::Domain, "regauge: regauged samples are not periodic (input not one full period?)");
    }
    return {Potential(std::move(q), T, theta), theta, defect};
}

std::vector<cplx> unregauge(const Potential& q) {
    const int n = q.n();
    std::vector<cplx> raw(static_cast<size_t>(2 * n));
    for (int j = 0; j < 2 * n; ++j) {
        double t = q.dt() * j;
        raw[static_cast<size_t>(j)] =
            q.sample(j % n) * cplx(std::cos(q.theta() * t), std::sin(q.theta() * t));
    }
    return raw;
}

}  // namespace gapcurve
