#pragma once

#include <complex>
#include <span>
#include <vector>

#include "gapcurve/algebra.hpp"

namespace gapcurve {

/// T-periodic complex-curvature potential sampled on a uniform grid.
///
/// samples[j] ~ q(j T / n), left endpoints, n even and >= 8.  theta is the
/// torsion shift of the quasi-periodic raw data the potential was regauged
/// from; it only matters to the geometry layer (spectral parameter shift).
/// Immutable after construction; band-limited midpoint values are
/// precomputed for the frame integrator.
class Potential {
public:
    Potential(std::vector<cplx> samples, double T, double theta = 0.0);

    int n() const { return static_cast<int>(samples_.size()); }
    double T() const { return T_; }
    double theta() const { return theta_; }
    double dt() const { return T_ / n(); }
    const std::vector<cplx>& samples() const { return samples_; }
    cplx sample(int j) const { return samples_[j]; }
    /// Band-limited interpolant at t_{j+1/2}.
    cplx midpoint(int j) const { return midpoints_[j]; }

    double l2_norm() const;

private:
    std::vector<cplx> samples_;
    std::vector<cplx> midpoints_;
    double T_;
    double theta_;
};

/// Fourier coefficients q^(k) = int_0^T q(t) exp(+2 pi i k t / T) dt
/// for k in [-K..K].  This sign/normalization convention is used
/// throughout the project.
struct FourierSeq {
    int K{0};
    std::vector<cplx> coeff;  // index k + K

    cplx operator()(int k) const { return coeff[static_cast<size_t>(k + K)]; }
    cplx& operator()(int k) { return coeff[static_cast<size_t>(k + K)]; }
};

/// Trapezoid (= rectangle, periodic data) quadrature of the defining
/// integral; exact for band-limited grid functions.  Requires K <= n/2 - 1.
FourierSeq fourier(const Potential& q, int K);

/// q(t) = (1/T) sum_k c(k) exp(-2 pi i k t / T) sampled on an n-grid.
Potential inverse_fourier(const FourierSeq& c, int n, double T, double theta = 0.0);

double l2_norm(const Potential& q);
double l2_distance(const Potential& q1, const Potential& q2);

/// L2 distance minimized over a constant phase factor e^{i phi} q2.
double l2_distance_mod_phase(const Potential& q1, const Potential& q2);

struct RegaugeResult {
    Potential q;       // periodic potential (n samples)
    double theta;      // extracted torsion shift, lambda_tilde = lambda + theta
    double defect;     // periodicity defect of the regauged samples
};

/// Extract theta from quasi-periodic raw samples covering two periods
/// (2n values on [0, 2T)) and regauge q~(t) = exp(-i theta t) raw(t).
/// theta is read from the unwrapped phase of raw so that full windings
/// are kept; the cross-period ratio fixes the branch.  Fails if the
/// regauged samples are not periodic to tolerance.
RegaugeResult regauge(std::span<const cplx> raw, double T, double defect_tol = 1e-6);

/// Evaluate exp(+i theta t) q(t) over two periods; inverse of regauge.
std::vector<cplx> unregauge(const Potential& q);

// Dense spectrum helpers (FFT for powers of two, direct DFT otherwise).
// fft_forward computes X[k] = sum_j x[j] exp(-2 pi i j k / n).
std::vector<cplx> fft_forward(std::span<const cplx> x);
std::vector<cplx> fft_inverse(std::span<const cplx> X);

}  // namespace gapcurve
