#pragma once

#include "critpt/census.hpp"
#include "critpt/hermite.hpp"
#include "critpt/spectral_model.hpp"
#include "critpt/stats.hpp"

#include <Eigen/Core>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

namespace critpt {

// colexicographic enumeration (last coordinate varies slowest) of all
// multi-indices over `width` coordinates with total order exactly q /
// at most Q; frozen against data/golden/multiindex_colex.txt
std::vector<Eigen::VectorXi> multi_indices_of_order(int width, int q);
std::vector<Eigen::VectorXi> multi_indices_up_to(int width, int Q);

double multi_factorial(const Eigen::VectorXi& n);

// limit Hermite coefficient of the gradient-localizing delta:
// H_{(x)n}(0) / (n! (2 pi)^{d/2}); zero whenever any entry is odd
double coeff_delta(const Eigen::VectorXi& n_lower);

// Hermite coefficient table of a functional h on R^N w.r.t. the standard
// normal: c(h, n) = E[h(Y) H_{(x)n}(Y)] / n!, Monte Carlo with antithetic
// pairs. Estimates within 3 stderr of zero are flagged and treated as
// exact zeros by downstream variance sums.
struct CoeffTable {
    int N = 0, Q = 0;
    std::vector<Eigen::VectorXi> indices; // colex, |n| <= Q
    std::vector<MomentEstimate> coeffs;
    std::vector<bool> flagged_zero;

    int position(const Eigen::VectorXi& n) const;
    const MomentEstimate& at(const Eigen::VectorXi& n) const { return coeffs[position(n)]; }
    double value(const Eigen::VectorXi& n) const; // 0 when flagged
};

CoeffTable hermite_coefficients(const std::function<double(const Eigen::VectorXd&)>& h, int N,
                                int Q, long n_mc, std::uint64_t seed);

// smallest order |n| >= 1 whose coefficient is significant at tol times
// its stderr; Q + 1 when none is (rank exceeds the truncation)
int hermite_rank(const CoeffTable& table, double tol = 3.0);

// E[H_{(x)m}(Y(0)) H_{(x)n}(Y(t))] for standard D-vectors with cross
// covariance gamma, by the diagram formula (a permanent over matchings of
// the m-legs against the n-legs). Exact 0 when |m| != |n|; |m| > 8 refused.
double mehler_cov(const Eigen::VectorXi& m, const Eigen::VectorXi& n,
                  const Eigen::MatrixXd& gamma);

// Wick: E[X1 X2 X3 X4] and the companion E[H2(X1) X2 X3]
double wick4(const Eigen::Matrix4d& cov);
double wick_h2(const Eigen::Matrix3d& cov);

struct ArconesResult {
    double lhs = 0;   // |Cov(h(W), h(Q))|, Monte Carlo
    double rhs = 0;   // Psi^rank * E[h^2]
    double lhs_stderr = 0;
    double psi = 0;
    int rank = 0;
    bool holds = false;
};

ArconesResult arcones_check(const std::function<double(const Eigen::VectorXd&)>& h, int N,
                            const Eigen::MatrixXd& cross_cov, int rank, long n_mc,
                            std::uint64_t seed);

// Chaos expansion of Crt_u^alpha: a_k(n) = d(n_lower) det(Lambda1)^{-1}
// c(f~_k, n_upper), with f_k(x, z) = (-1)^k det(x) 1{index k}(x) 1{z > u}
// and f~_k = f_k o Lambda2. The level indicator is dropped at u = -inf.
struct ChaosExpansion {
    int d = 0, D = 0, Q = 0;
    Level u;
    Eigen::VectorXd alpha; // (d+1) combination weights
    CovarianceStructure cov;
    double det_lambda1 = 1.0;
    std::vector<CoeffTable> per_k; // c(f~_k, .) over D - d coordinates

    double c_coeff(int k, const Eigen::VectorXi& n_upper) const;
    double a_k(int k, const Eigen::VectorXi& n) const;
    double a_alpha(const Eigen::VectorXi& n) const;
};

ChaosExpansion build_expansion(const SpectralModel& model, const Level& u, int Q, long n_mc,
                               std::uint64_t seed);

// f~_k evaluated on a standard vector of dimension D - d (test fixture and
// coefficient-table building block)
double f_tilde(const CovarianceStructure& cov, int k, const Level& u, const Eigen::VectorXd& y);

// cross covariance Gamma(t) = E[Y(0) Y(t)^T] of the standardized vector
Eigen::MatrixXd gamma_at(const SpectralModel& model, const CovarianceStructure& cov,
                         const Eigen::VectorXd& t);

// V_q^alpha(u) as the lag integral sum_{m,n} a(m) a(n) int E[H_m(Y(0))
// H_n(Y(t))] dt over R^d (Mehler route); q <= Q <= 6, d <= 2
double chaotic_variance_term(const SpectralModel& model, const ChaosExpansion& expansion, int q,
                             double quad_tol = 1e-7);

// evaluable spectral kernels psi~_j(lambda) = (Lambda^{-1} nu(lambda))_j,
// nu = ((i lambda_j); (-lambda_j lambda_k)_{j<=k}; 1)
struct SpectralKernelSet {
    int d = 0, D = 0;
    Eigen::MatrixXd lambda1, lambda2;

    explicit SpectralKernelSet(const CovarianceStructure& cov);
    Eigen::VectorXcd all(const Eigen::VectorXd& lambda) const;
};

// Gamma_ij(t) rebuilt as the Fourier transform of psi~_i conj(psi~_j) f
// (d = 1); the identity check against gamma_at
double gamma_entry_from_kernels(const SpectralModel& model, const SpectralKernelSet& kernels,
                                int i, int j, double t);

// V_q^alpha(u) = (2 pi)^d / q! * int_S |P_q|^2 prod f dsigma over the
// hyperplane S = {sum lambda_i = 0} parameterized by dropping lambda_q
// (convolution route); d = 1, q <= 3
double limit_variance_convolution(const SpectralModel& model, const ChaosExpansion& expansion,
                                  int q, double quad_tol = 1e-9);

} // namespace critpt
