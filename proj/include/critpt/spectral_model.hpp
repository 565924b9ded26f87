#pragma once

#include "critpt/tensors.hpp"

#include <Eigen/Core>
#include <string>
#include <vector>

namespace critpt {

enum class SpectralFamily { gaussian_isotropic, gaussian_anisotropic, bump_compact };

std::string family_name(SpectralFamily f);
SpectralFamily family_from_name(const std::string& name);

// A stationary covariance structure given through its spectral density
// f >= 0, f(-lambda) = f(lambda), integrating to total_mass = Var X(t).
//
// gaussian_isotropic:    f = mass * standard normal density on R^d
// gaussian_anisotropic:  f = mass * product of centered normals with the
//                        given per-axis scales (axis_scales[l] = std dev)
// bump_compact:          f = mass * smooth bump supported on ||lambda|| <= radius;
//                        center > 0 splits it into a symmetric pair of bumps
//                        at +-center e_1 (diagnostic: makes f(0) = 0)
struct SpectralModel {
    int dim = 1;
    SpectralFamily family = SpectralFamily::gaussian_isotropic;
    Eigen::VectorXd axis_scales; // gaussian_anisotropic only
    double radius = 1.0;         // bump_compact only
    double center = 0.0;         // bump_compact only
    double total_mass = 1.0;

    static SpectralModel gaussian_iso(int d, double mass = 1.0);
    static SpectralModel gaussian_aniso(const Eigen::VectorXd& scales, double mass = 1.0);
    static SpectralModel bump(int d, double radius, double mass = 1.0, double center = 0.0);

    double density(const Eigen::VectorXd& lambda) const;
    bool is_gaussian() const { return family != SpectralFamily::bump_compact; }
    // per-axis scale vector, also defined for the isotropic family
    Eigen::VectorXd scales() const;
};

// integral of lambda^alpha * f(lambda) over R^d, |alpha| <= 4
double spectral_moment(const SpectralModel& model, const Eigen::VectorXi& alpha);

// Joint covariance of the D-vector (X', upper(X''), X) at a single point,
// D = d + d(d+1)/2 + 1, with its block Cholesky factor. X' is exactly
// uncorrelated from (X'', X) because odd spectral moments of an even
// density vanish, so Lambda = diag(Lambda1, Lambda2).
struct CovarianceStructure {
    int dim = 0;
    Eigen::MatrixXd xi;      // D x D
    Eigen::MatrixXd lambda1; // d x d, lower
    Eigen::MatrixXd lambda2; // (D - d) x (D - d), lower
    Eigen::MatrixXd lambda;  // D x D block factor
    Tensor4 moments4;        // r^(4)(0), equivalently 4th spectral moments

    int D() const { return dim + tri_size(dim) + 1; }
    Eigen::MatrixXd grad_cov() const { return xi.topLeftCorner(dim, dim); }
};

CovarianceStructure covariance_structure(const SpectralModel& model);

// All partial derivatives of r at a lag, orders 0..4, plus the Arcones
// majorant Psi(t) = max |d^j r / dt_m|, 0 <= j <= 4.
struct CovarianceAtLag {
    Eigen::VectorXd t;
    double r0 = 0;
    Eigen::VectorXd r1;
    Eigen::MatrixXd r2;
    Tensor3 r3;
    Tensor4 r4;
    double psi = 0;
};

CovarianceAtLag covariance_at(const SpectralModel& model, const Eigen::VectorXd& t);

// Cross-covariance E[ bX(0) bX(t)^T ] of the D-vector (X', upper(X''), X)
// at lag t, assembled from the derivative tensors.
Eigen::MatrixXd cross_covariance(const CovarianceAtLag& c);

struct AssumptionCheck {
    bool pass = false;
    double statistic = 0.0;
    std::string detail;
};

struct AssumptionReport {
    AssumptionCheck a1; // min eigenvalue of Var X' > 0
    AssumptionCheck a3; // integral of Psi finite (tail-bounded quadrature)
    AssumptionCheck a4; // f(0) > 0
    AssumptionCheck a5; // Var(X''(0) mu) N.D. over a direction grid
    AssumptionCheck a6; // ||r4(t) - r4(0)|| / ||t||^d integrable at 0 (dyadic shells)
    bool a2_implied() const { return a1.pass && a5.pass && a6.pass; }
    bool all_pass() const { return a1.pass && a3.pass && a4.pass && a5.pass && a6.pass; }
};

AssumptionReport check_assumptions(const SpectralModel& model);

// 1 / sqrt(max eigenvalue of Var X'): the natural spatial unit.
double correlation_length(const SpectralModel& model);

} // namespace critpt
