#include "critpt/kac_rice.hpp"

#include "critpt/errors.hpp"
#include "critpt/quadrature.hpp"
#include "critpt/rng.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace critpt {

ConditionalGaussian ConditionalGaussian::regress(const Eigen::MatrixXd& var_w,
                                                 const Eigen::MatrixXd& cov_zw,
                                                 const Eigen::MatrixXd& var_z,
                                                 const Eigen::VectorXd& w) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(var_w);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw NonDegeneracyViolation("conditioner covariance is not positive definite");
    Eigen::MatrixXd vinv_czw_t = ldlt.solve(cov_zw.transpose());
    ConditionalGaussian out;
    out.mean = cov_zw * ldlt.solve(w);
    Eigen::MatrixXd cov = var_z - cov_zw * vinv_czw_t;
    cov = 0.5 * (cov + cov.transpose());

    // Exact arithmetic gives a PSD matrix. Roundoff scaled by the conditioner's
    // condition number can leave small negative eigenvalues; project those to
    // zero and treat anything gross as a real non-degeneracy failure.
    double scale = std::max(1.0, var_z.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < -1e-6 * scale)
        throw NonDegeneracyViolation("conditional covariance has a negative eigenvalue");
    if (min_eig < 0.0) {
        cov = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
              es.eigenvectors().transpose();
        cov = 0.5 * (cov + cov.transpose());
    }
    out.cov = cov;
    return out;
}

namespace {

// lower factor of a PSD matrix, robust to semidefiniteness
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& cov) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
}

double gaussian_density_at_zero(const Eigen::MatrixXd& cov) {
    double det = cov.determinant();
    if (det <= 0) throw NonDegeneracyViolation("singular covariance in density evaluation");
    return std::pow(2.0 * M_PI, -0.5 * cov.rows()) / std::sqrt(det);
}

Eigen::MatrixXd sym_from_tri(const Eigen::VectorXd& v, int d) {
    Eigen::MatrixXd h(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            h(i, j) = v[tri_index(i, j, d)];
            h(j, i) = v[tri_index(i, j, d)];
        }
    return h;
}

int index_of(const Eigen::MatrixXd& hess) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess, Eigen::EigenvaluesOnly);
    int idx = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()[i] < 0) ++idx;
    return idx;
}

} // namespace

MomentEstimate expected_count(const SpectralModel& model, const Level& u, std::optional<int> k,
                              const Box& box, long n_mc, std::uint64_t seed) {
    const int d = model.dim;
    if (k && (*k < 0 || *k > d))
        throw std::invalid_argument("expected_count: index k outside [0, d]");
    CovarianceStructure cs = covariance_structure(model);
    const int nt = tri_size(d);
    const double volume = std::pow(2.0 * box.half_width, d);
    const double grad_density = gaussian_density_at_zero(cs.grad_cov());

    Rng rng(split_seed(seed, 0x6b726d63ULL));
    RunningStat stat;
    Eigen::VectorXd y(nt + 1);
    for (long i = 0; i < n_mc / 2; ++i) {
        y = rng.normal_vector(nt + 1);
        double pair_sum = 0.0;
        for (int s = 0; s < 2; ++s) {
            Eigen::VectorXd z = cs.lambda2 * (s == 0 ? y : Eigen::VectorXd(-y));
            Eigen::MatrixXd hess = sym_from_tri(z.head(nt), d);
            double level_ok = u.above(z[nt]) ? 1.0 : 0.0;
            double det = hess.determinant();
            double indicator = 1.0;
            if (k) indicator = index_of(hess) == *k ? 1.0 : 0.0;
            pair_sum += std::abs(det) * indicator * level_ok;
        }
        stat.add(0.5 * pair_sum);
    }
    MomentEstimate est = stat.estimate();
    est.mean *= volume * grad_density;
    est.stderr_ *= volume * grad_density;
    est.n_samples = n_mc;
    return est;
}

namespace {

// all covariance inputs for one lag of the order-2 formula
struct LagLaw {
    Eigen::MatrixXd var_w;  // Var(X'(0), X'(t)), 2d x 2d
    Eigen::MatrixXd cov_zw; // Cov((X''(0), X''(t)), W)
    Eigen::MatrixXd var_z;  // Var(X''(0), X''(t)) as packed triangles
};

LagLaw lag_law(const SpectralModel& model, const Eigen::VectorXd& t) {
    const int d = model.dim;
    const int nt = tri_size(d);
    CovarianceAtLag c0 = covariance_at(model, Eigen::VectorXd::Zero(d));
    CovarianceAtLag ct = covariance_at(model, t);
    LagLaw law;

    law.var_w.resize(2 * d, 2 * d);
    // E[X'_i(0) X'_j(t)] = -r_ij(t)
    law.var_w.topLeftCorner(d, d) = -c0.r2;
    law.var_w.bottomRightCorner(d, d) = -c0.r2;
    law.var_w.topRightCorner(d, d) = -ct.r2;
    law.var_w.bottomLeftCorner(d, d) = -ct.r2.transpose();

    // E[X''_ij(0) X'_k(t)] = r_ijk(t); E[X''_ij(t) X'_k(0)] = -r_ijk(t)
    law.cov_zw = Eigen::MatrixXd::Zero(2 * nt, 2 * d);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j)
            for (int kk = 0; kk < d; ++kk) {
                int row = tri_index(i, j, d);
                law.cov_zw(row, d + kk) = ct.r3(i, j, kk);
                law.cov_zw(nt + row, kk) = -ct.r3(i, j, kk);
                // within-point blocks are r3(0) = 0
            }

    law.var_z.resize(2 * nt, 2 * nt);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j)
            for (int kk = 0; kk < d; ++kk)
                for (int l = kk; l < d; ++l) {
                    int a = tri_index(i, j, d), b = tri_index(kk, l, d);
                    law.var_z(a, b) = c0.r4(i, j, kk, l);
                    law.var_z(nt + a, nt + b) = c0.r4(i, j, kk, l);
                    law.var_z(a, nt + b) = ct.r4(i, j, kk, l);
                    law.var_z(nt + a, b) = ct.r4(i, j, kk, l);
                }
    return law;
}

// A(t, v) = E_C |det X''(0) det X''(t)| under {X'(0) = X'(t) = v},
// antithetic Monte Carlo around the conditional mean
MomentEstimate conditional_det_product(const SpectralModel& model, const Eigen::VectorXd& t,
                                       const Eigen::VectorXd& v, long n_mc, Rng& rng) {
    const int d = model.dim;
    const int nt = tri_size(d);
    LagLaw law = lag_law(model, t);
    Eigen::VectorXd w(2 * d);
    w << v, v;
    ConditionalGaussian cond = ConditionalGaussian::regress(law.var_w, law.cov_zw, law.var_z, w);
    Eigen::MatrixXd factor = psd_factor(cond.cov);

    RunningStat stat;
    for (long i = 0; i < n_mc / 2; ++i) {
        Eigen::VectorXd g = rng.normal_vector(2 * nt);
        double pair = 0.0;
        for (int s = 0; s < 2; ++s) {
            Eigen::VectorXd z = cond.mean + factor * (s == 0 ? g : Eigen::VectorXd(-g));
            double det0 = sym_from_tri(z.head(nt), d).determinant();
            double det1 = sym_from_tri(z.tail(nt), d).determinant();
            pair += std::abs(det0 * det1);
        }
        stat.add(0.5 * pair);
    }
    return stat.estimate();
}

} // namespace

MomentEstimate second_factorial_moment(const SpectralModel& model, const Eigen::VectorXd& v,
                                       const Box& B, long n_mc, int n_quad, std::uint64_t seed) {
    const int d = model.dim;
    if (d > 2) throw CapabilityError("second_factorial_moment supports d <= 2");
    const double side = 2.0 * B.half_width;
    if (side * std::sqrt(static_cast<double>(d)) > correlation_length(model) * (1.0 + 1e-9))
        throw std::invalid_argument(
            "second_factorial_moment: box diameter exceeds one correlation length");
    Rng rng(split_seed(seed, 0x32666d6fULL));

    // integrand at lag tau: A(tau, v) p_{X'(0),X'(tau)}(v, v), integrated
    // against the box-overlap volume prod (side - |tau_i|)
    auto density_at = [&](const Eigen::MatrixXd& var_w, const Eigen::VectorXd& w) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(var_w);
        double det = var_w.determinant();
        if (det <= 0 || ldlt.info() != Eigen::Success)
            throw NonDegeneracyViolation("joint gradient law singular at a sampled lag");
        double quad = w.dot(ldlt.solve(w));
        return std::pow(2.0 * M_PI, -0.5 * var_w.rows()) / std::sqrt(det) *
               std::exp(-0.5 * quad);
    };

    // Lags whose gradient law is degenerate at working precision contribute
    // O(tau^2 / tau^d) and are dropped: p tau^d stays bounded while the
    // conditional determinant factor vanishes toward coalescence.
    auto resolvable = [](const Eigen::MatrixXd& var_w) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(var_w, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff() > 1e-9 * es.eigenvalues().maxCoeff();
    };

    double total = 0.0;
    double var_total = 0.0;
    long used_samples = 0;

    if (d == 1) {
        // 2 int_0^side (side - tau) A(tau) p(tau) dtau; geometric panels
        // toward 0 where p ~ 1/tau and A ~ tau^2 keep nodes well placed
        std::vector<std::pair<double, double>> panels = {
            {1e-4 * side, side / 16.0}, {side / 16.0, side / 4.0}, {side / 4.0, side}};
        int nodes_per_panel = std::max(4, n_quad / 3);
        for (auto [lo, hi] : panels) {
            FixedRule rule = gauss_legendre(nodes_per_panel, lo, hi);
            for (int i = 0; i < nodes_per_panel; ++i) {
                Eigen::VectorXd tau(1);
                tau << rule.nodes[i];
                LagLaw law = lag_law(model, tau);
                if (!resolvable(law.var_w)) continue;
                Eigen::VectorXd w(2);
                w << v[0], v[0];
                double p = density_at(law.var_w, w);
                MomentEstimate a = conditional_det_product(model, tau, v, n_mc, rng);
                double weight = 2.0 * rule.weights[i] * (side - rule.nodes[i]) * p;
                total += weight * a.mean;
                var_total += weight * weight * a.stderr_ * a.stderr_;
                used_samples += a.n_samples;
            }
        }
    } else {
        // polar reduction over tau = rho mu; the rho^{d-1} Jacobian against
        // the rho^{-d} density blowup leaves an integrable integrand
        int n_angular = 16;
        int n_radial = std::max(4, n_quad / 4);
        double rho_max = side * std::sqrt(2.0);
        std::vector<std::pair<double, double>> panels = {{1e-3 * side, side / 8.0},
                                                         {side / 8.0, rho_max}};
        for (int ia = 0; ia < n_angular; ++ia) {
            double ang = 2.0 * M_PI * (ia + 0.5) / n_angular;
            Eigen::VectorXd mu(2);
            mu << std::cos(ang), std::sin(ang);
            for (auto [lo, hi] : panels) {
                FixedRule rule = gauss_legendre(n_radial, lo, hi);
                for (int i = 0; i < n_radial; ++i) {
                    double rho = rule.nodes[i];
                    Eigen::VectorXd tau = rho * mu;
                    double overlap = std::max(0.0, side - std::abs(tau[0])) *
                                     std::max(0.0, side - std::abs(tau[1]));
                    if (overlap == 0.0) continue;
                    LagLaw law = lag_law(model, tau);
                    if (!resolvable(law.var_w)) continue;
                    Eigen::VectorXd w(4);
                    w << v, v;
                    double p = density_at(law.var_w, w);
                    MomentEstimate a = conditional_det_product(model, tau, v, n_mc, rng);
                    double weight =
                        rule.weights[i] * rho * (2.0 * M_PI / n_angular) * overlap * p;
                    total += weight * a.mean;
                    var_total += weight * weight * a.stderr_ * a.stderr_;
                    used_samples += a.n_samples;
                }
            }
        }
    }

    MomentEstimate est;
    est.mean = total;
    est.stderr_ = std::sqrt(var_total);
    est.n_samples = used_samples;
    est.method = EstimateMethod::mc;
    return est;
}

double density_bound_limit(const SpectralModel& model, const Eigen::VectorXd& mu) {
    const int d = model.dim;
    CovarianceStructure cs = covariance_structure(model);
    // Var(X'(0), X''(0) mu): Cov(X', X'' mu) = 0 at a single point
    Eigen::MatrixXd var(2 * d, 2 * d);
    var.setZero();
    var.topLeftCorner(d, d) = cs.grad_cov();
    var.bottomRightCorner(d, d) = cs.moments4.contract_last_two(mu);
    double det = var.determinant();
    if (det <= 0) throw NonDegeneracyViolation("Var(X'(0), X''(0) mu) singular: (A5) violated");
    return std::pow(2.0 * M_PI, -d) / std::sqrt(det);
}

std::vector<DensityBoundPoint> density_bound_profile(const SpectralModel& model,
                                                     const Eigen::VectorXd& mu,
                                                     const std::vector<double>& rhos) {
    const int d = model.dim;
    // fail fast when (A5) is violated for this direction
    (void)density_bound_limit(model, mu);
    std::vector<DensityBoundPoint> out;
    for (double rho : rhos) {
        CovarianceAtLag c0 = covariance_at(model, Eigen::VectorXd::Zero(d));
        CovarianceAtLag ct = covariance_at(model, rho * mu);
        Eigen::MatrixXd var_w(2 * d, 2 * d);
        var_w.topLeftCorner(d, d) = -c0.r2;
        var_w.bottomRightCorner(d, d) = -c0.r2;
        var_w.topRightCorner(d, d) = -ct.r2;
        var_w.bottomLeftCorner(d, d) = -ct.r2.transpose();
        double det = var_w.determinant();
        if (det <= 0) throw NonDegeneracyViolation("joint gradient law singular at rho");
        double p = std::pow(2.0 * M_PI, -d) / std::sqrt(det);
        out.push_back({rho, p * std::pow(rho, d)});
    }
    return out;
}

} // namespace critpt
