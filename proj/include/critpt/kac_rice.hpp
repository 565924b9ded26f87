#pragma once

#include "critpt/census.hpp"
#include "critpt/spectral_model.hpp"
#include "critpt/stats.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

namespace critpt {

// Gaussian law of a target vector conditioned on linear observations, built
// from the regression formulas mean = C V^{-1} w, cov = Var_Z - C V^{-1} C^T.
struct ConditionalGaussian {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    // var_w: covariance of the conditioners, cov_zw: Cov(Z, W),
    // var_z: covariance of the target, w: observed value of W
    static ConditionalGaussian regress(const Eigen::MatrixXd& var_w, const Eigen::MatrixXd& cov_zw,
                                       const Eigen::MatrixXd& var_z, const Eigen::VectorXd& w);
};

// E[Crt_u^k(T)] = (2T)^d phi_d(0; Var X') E[|det X''| 1{index=k} 1{X>u}],
// by Monte Carlo over the unconditional joint law of (X'', X) drawn through
// Lambda2 (valid because Cov(X', (X'', X)) = 0). k = nullopt drops the
// index indicator and counts all critical points.
MomentEstimate expected_count(const SpectralModel& model, const Level& u, std::optional<int> k,
                              const Box& box, long n_mc, std::uint64_t seed);

// Second factorial moment E[N(v,B)(N(v,B)-1)] of the gradient-level count
// N(v,B) = #{t in B : X'(t) = v}, through the order-2 Kac-Rice formula,
// reduced by stationarity to a single lag integral evaluated on fixed
// Gauss-Legendre nodes (n_quad of them) with n_mc conditional draws per
// node for the factor E_C |det X''(0) det X''(t)|.
MomentEstimate second_factorial_moment(const SpectralModel& model, const Eigen::VectorXd& v,
                                       const Box& B, long n_mc, int n_quad, std::uint64_t seed);

// p_{X'(0), X'(rho mu)}(0, 0) * rho^d for each rho; must stay bounded and
// approach the value implied by det Var(X'(0), X''(0) mu).
struct DensityBoundPoint {
    double rho;
    double value;
};
std::vector<DensityBoundPoint> density_bound_profile(const SpectralModel& model,
                                                     const Eigen::VectorXd& mu,
                                                     const std::vector<double>& rhos);

// limiting value of the profile above
double density_bound_limit(const SpectralModel& model, const Eigen::VectorXd& mu);

} // namespace critpt
