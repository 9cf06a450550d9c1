#pragma once

#include <array>
#include <vector>

#include "gapcurve/algebra.hpp"
#include "gapcurve/frame.hpp"
#include "gapcurve/potential.hpp"

namespace gapcurve {

enum class Space { R3, S3 };

using Quat = std::array<double, 4>;  // scalar-first unit quaternion

/// Unit quaternion (q0,q1,q2,q3) <-> SU2 matrix
/// (q0 + i q1, q2 + i q3 / -q2 + i q3, q0 - i q1); the Euclidean inner
/// product of R^4 matches 1/2 Re tr(U V^dagger).
Mat2 quat_to_su2(const Quat& p);
Quat su2_to_quat(const Mat2& U);

/// Sampled closed curve: n points at t_j = j T / n (endpoint not repeated).
/// R3 points are Su2Vector coordinates; S3 points unit quaternions.
struct CurveSamples {
    Space space{Space::R3};
    double T{0.0};
    std::vector<double> times;
    std::vector<Su2Vector> points_r3;
    std::vector<Quat> points_s3;
    // optional tangents (filled by reconstruct)
    std::vector<Su2Vector> tangents_r3;
    std::vector<Quat> tangents_s3;

    int n() const {
        return static_cast<int>(space == Space::R3 ? points_r3.size() : points_s3.size());
    }
    double dt() const { return T / n(); }
};

/// Closing-condition evaluation: the mu form (Floquet eigenvalue at the
/// distinguished lambda) and the matrix form (|M -+ 1|, |M'|) side by side,
/// plus the endpoint and frame gaps of the reconstructed curve.
struct ClosingReport {
    Space space{Space::R3};
    double theta{0.0};
    int eta{+1};               // the +-1 the monodromy is closest to
    cplx mu_plus;              // S3: mu(1+theta); R3: mu(theta)
    cplx mu_minus;             // S3: mu(-1+theta); R3: unused
    cplx mu_prime;             // R3: mu'(theta)
    double mu_residual{0.0};   // max |mu - eta| (and |mu'| for R3)
    double matrix_residual{0.0};  // max |M - eta 1| (and |M'| for R3)
    double endpoint_gap{0.0};  // |gamma(T) - gamma(0)|
    double frame_gap{0.0};     // min_eta |M - eta 1| at the frame lambda
    bool closed{false};
    double tol{0.0};
};

struct IngestOptions {
    double closure_tol{1e-3};   // endpoint gap tolerance, absolute
    double speed_tol{1e-3};     // unit-speed tolerance on finite differences
    double regauge_tol{1e-6};
};

/// Curve -> potential: tangents by band-limited differentiation, a
/// discrete parallel frame along the curve, natural curvatures
/// q_raw = k1 + i k2 over two laps, then regauge.  The result equals the
/// complex curvature up to a constant phase (initial frame gauge).
Potential ingest(const CurveSamples& curve, const IngestOptions& opt = {});

/// Potential -> curve via the frame products at the distinguished lambda:
/// S3: F(t, 1+theta) F(t, -1+theta)^{-1};
/// R3: 2 dF/dlambda(t, theta) F(t, theta)^{-1}.
/// refined = true runs the integrator on the grid and on its band-limited
/// halving and Richardson-extrapolates the points, removing the leading
/// O(h^2) error (used by the round-trip comparisons).
CurveSamples reconstruct(const Potential& q, Space space, bool refined = false);

/// Tangent samples of the reconstructed curve (F eps F^{-1} forms).
std::vector<Su2Vector> reconstruct_tangents_r3(const Potential& q);

ClosingReport check_closing(const Potential& q, Space space, double tol = 1e-6);

/// Stable mu'(lambda) from the monodromy pair via the eigen projector,
/// with a Frobenius fallback at an exact +-1 degeneracy.
cplx mu_prime_stable(const Mat2& M, const Mat2& Mprime, int branch_sign = +1);

/// Discrete W^{k,2} distance (k = order <= 2): L2 norms of the difference
/// and its central-difference derivatives, periodic wrap; S3 differences
/// taken in the ambient R^4.  With align = true the second curve is moved
/// by the rigid motion matching the t=0 frames first.
double sobolev_distance(const CurveSamples& c1, const CurveSamples& c2, int order,
                        bool align = false);

/// Rigid-motion alignment of c onto reference using the t=0 frame
/// (tangent + first normal); rotation+translation in R3, SU2 x SU2 in S3.
CurveSamples align_to(const CurveSamples& reference, const CurveSamples& c);

}  // namespace gapcurve
