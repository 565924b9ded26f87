#include "critpt/chaos.hpp"

#include "critpt/errors.hpp"
#include "critpt/quadrature.hpp"
#include "critpt/rng.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace critpt {

std::vector<Eigen::VectorXi> multi_indices_of_order(int width, int q) {
    std::vector<Eigen::VectorXi> out;
    if (width == 1) {
        Eigen::VectorXi n(1);
        n[0] = q;
        out.push_back(n);
        return out;
    }
    for (int last = 0; last <= q; ++last) {
        for (const Eigen::VectorXi& head : multi_indices_of_order(width - 1, q - last)) {
            Eigen::VectorXi n(width);
            n.head(width - 1) = head;
            n[width - 1] = last;
            out.push_back(n);
        }
    }
    return out;
}

std::vector<Eigen::VectorXi> multi_indices_up_to(int width, int Q) {
    std::vector<Eigen::VectorXi> out;
    for (int q = 0; q <= Q; ++q)
        for (const Eigen::VectorXi& n : multi_indices_of_order(width, q)) out.push_back(n);
    return out;
}

double multi_factorial(const Eigen::VectorXi& n) {
    double v = 1.0;
    for (Eigen::Index i = 0; i < n.size(); ++i)
        for (int k = 2; k <= n[i]; ++k) v *= k;
    return v;
}

double coeff_delta(const Eigen::VectorXi& n_lower) {
    double h0 = 1.0;
    for (Eigen::Index i = 0; i < n_lower.size(); ++i) {
        if (n_lower[i] % 2 == 1) return 0.0;
        h0 *= hermite_at_zero(n_lower[i]);
    }
    return h0 / (multi_factorial(n_lower) * std::pow(2.0 * M_PI, 0.5 * n_lower.size()));
}

int CoeffTable::position(const Eigen::VectorXi& n) const {
    for (std::size_t i = 0; i < indices.size(); ++i)
        if (indices[i] == n) return static_cast<int>(i);
    throw std::out_of_range("multi-index not in coefficient table");
}

double CoeffTable::value(const Eigen::VectorXi& n) const {
    int p = position(n);
    return flagged_zero[p] ? 0.0 : coeffs[p].mean;
}

CoeffTable hermite_coefficients(const std::function<double(const Eigen::VectorXd&)>& h, int N,
                                int Q, long n_mc, std::uint64_t seed) {
    CoeffTable table;
    table.N = N;
    table.Q = Q;
    table.indices = multi_indices_up_to(N, Q);
    const std::size_t m = table.indices.size();
    std::vector<RunningStat> stats(m);

    Rng rng(split_seed(seed, 0x636f6566ULL));
    Eigen::MatrixXd herm(N, Q + 1); // herm(i, k) = H_k(y_i)
    Eigen::VectorXd y(N);
    std::vector<double> contrib(m);
    for (long it = 0; it < n_mc / 2; ++it) {
        y = rng.normal_vector(N);
        std::fill(contrib.begin(), contrib.end(), 0.0);
        for (int s = 0; s < 2; ++s) {
            Eigen::VectorXd ys = s == 0 ? y : Eigen::VectorXd(-y);
            double hv = h(ys);
            for (int i = 0; i < N; ++i) {
                herm(i, 0) = 1.0;
                if (Q >= 1) herm(i, 1) = ys[i];
                for (int k = 1; k < Q; ++k)
                    herm(i, k + 1) = ys[i] * herm(i, k) - k * herm(i, k - 1);
            }
            for (std::size_t j = 0; j < m; ++j) {
                double p = hv;
                const Eigen::VectorXi& n = table.indices[j];
                for (int i = 0; i < N; ++i) p *= herm(i, n[i]);
                contrib[j] += 0.5 * p;
            }
        }
        for (std::size_t j = 0; j < m; ++j) stats[j].add(contrib[j]);
    }

    table.coeffs.resize(m);
    table.flagged_zero.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        MomentEstimate e = stats[j].estimate();
        double fact = multi_factorial(table.indices[j]);
        e.mean /= fact;
        e.stderr_ /= fact;
        e.n_samples = n_mc;
        table.coeffs[j] = e;
        table.flagged_zero[j] = std::abs(e.mean) < 3.0 * e.stderr_;
    }
    return table;
}

int hermite_rank(const CoeffTable& table, double tol) {
    int best = table.Q + 1;
    for (std::size_t j = 0; j < table.indices.size(); ++j) {
        int order = table.indices[j].sum();
        if (order < 1 || order >= best) continue;
        const MomentEstimate& e = table.coeffs[j];
        bool significant = e.stderr_ > 0 ? std::abs(e.mean) > tol * e.stderr_
                                         : std::abs(e.mean) > 0;
        if (significant) best = order;
    }
    return best;
}

namespace {

std::vector<int> legs_of(const Eigen::VectorXi& n) {
    std::vector<int> legs;
    for (int i = 0; i < n.size(); ++i)
        for (int r = 0; r < n[i]; ++r) legs.push_back(i);
    return legs;
}

// permanent by Ryser's formula, q <= 8
double permanent(const Eigen::MatrixXd& a) {
    const int q = static_cast<int>(a.rows());
    double total = 0.0;
    for (unsigned s = 1; s < (1u << q); ++s) {
        double prod = 1.0;
        for (int i = 0; i < q; ++i) {
            double row = 0.0;
            for (int j = 0; j < q; ++j)
                if (s & (1u << j)) row += a(i, j);
            prod *= row;
        }
        int bits = __builtin_popcount(s);
        total += ((q - bits) % 2 == 0 ? 1.0 : -1.0) * prod;
    }
    return total;
}

} // namespace

double mehler_cov(const Eigen::VectorXi& m, const Eigen::VectorXi& n,
                  const Eigen::MatrixXd& gamma) {
    if (m.sum() != n.sum()) return 0.0; // orthogonality across chaos orders
    const int q = m.sum();
    if (q == 0) return 1.0;
    if (q > 8) throw CapabilityError("mehler_cov: order above the combinatorial guard (8)");
    std::vector<int> la = legs_of(m), lb = legs_of(n);
    Eigen::MatrixXd a(q, q);
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j) a(i, j) = gamma(la[i], lb[j]);
    return permanent(a);
}

double wick4(const Eigen::Matrix4d& c) {
    return c(0, 1) * c(2, 3) + c(0, 2) * c(1, 3) + c(0, 3) * c(1, 2);
}

double wick_h2(const Eigen::Matrix3d& c) { return 2.0 * c(0, 1) * c(0, 2); }

ArconesResult arcones_check(const std::function<double(const Eigen::VectorXd&)>& h, int N,
                            const Eigen::MatrixXd& cross_cov, int rank, long n_mc,
                            std::uint64_t seed) {
    ArconesResult res;
    res.rank = rank;
    double psi = 0.0;
    for (int j = 0; j < N; ++j) {
        psi = std::max(psi, cross_cov.row(j).cwiseAbs().sum());
        psi = std::max(psi, cross_cov.col(j).cwiseAbs().sum());
    }
    res.psi = psi;
    if (psi > 1.0 + 1e-12)
        throw InapplicableRegimeError("Arcones' inequality requires Psi <= 1, got " +
                                      std::to_string(psi));

    Eigen::MatrixXd joint(2 * N, 2 * N);
    joint.setIdentity();
    joint.topRightCorner(N, N) = cross_cov;
    joint.bottomLeftCorner(N, N) = cross_cov.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(joint);
    if (es.eigenvalues().minCoeff() < -1e-9)
        throw std::invalid_argument("cross covariance is not a valid joint law");
    Eigen::MatrixXd factor =
        es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

    Rng rng(split_seed(seed, 0x61726373ULL));
    RunningStat prod_stat, w_stat, q_stat, h2_stat;
    std::vector<double> us, vs;
    us.reserve(n_mc);
    vs.reserve(n_mc);
    for (long i = 0; i < n_mc; ++i) {
        Eigen::VectorXd g = factor * rng.normal_vector(2 * N);
        double hw = h(g.head(N));
        double hq = h(g.tail(N));
        us.push_back(hw);
        vs.push_back(hq);
        h2_stat.add(hw * hw);
    }
    double mean_u = ordered_pairwise_sum(us) / n_mc;
    double mean_v = ordered_pairwise_sum(vs) / n_mc;
    RunningStat cov_stat;
    for (long i = 0; i < n_mc; ++i) cov_stat.add((us[i] - mean_u) * (vs[i] - mean_v));
    res.lhs = std::abs(cov_stat.mean());
    res.lhs_stderr = cov_stat.stderr_of_mean();
    res.rhs = std::pow(psi, rank) * h2_stat.mean();
    res.holds = res.lhs <= res.rhs + 3.0 * res.lhs_stderr;
    return res;
}

double f_tilde(const CovarianceStructure& cov, int k, const Level& u, const Eigen::VectorXd& y) {
    const int d = cov.dim;
    const int nt = tri_size(d);
    Eigen::VectorXd z = cov.lambda2 * y;
    Eigen::MatrixXd x(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            x(i, j) = z[tri_index(i, j, d)];
            x(j, i) = z[tri_index(i, j, d)];
        }
    if (!u.above(z[nt])) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x, Eigen::EigenvaluesOnly);
    int index = 0;
    for (Eigen::Index i = 0; i < d; ++i)
        if (es.eigenvalues()[i] < 0) ++index;
    if (index != k) return 0.0;
    return (k % 2 == 0 ? 1.0 : -1.0) * x.determinant();
}

double ChaosExpansion::c_coeff(int k, const Eigen::VectorXi& n_upper) const {
    return per_k[k].value(n_upper);
}

double ChaosExpansion::a_k(int k, const Eigen::VectorXi& n) const {
    Eigen::VectorXi lower = n.head(d);
    Eigen::VectorXi upper = n.tail(D - d);
    double dl = coeff_delta(lower);
    if (dl == 0.0) return 0.0;
    return dl / det_lambda1 * c_coeff(k, upper);
}

double ChaosExpansion::a_alpha(const Eigen::VectorXi& n) const {
    double v = 0.0;
    for (int k = 0; k <= d; ++k) v += alpha[k] * a_k(k, n);
    return v;
}

ChaosExpansion build_expansion(const SpectralModel& model, const Level& u, int Q, long n_mc,
                               std::uint64_t seed) {
    ChaosExpansion ex;
    ex.d = model.dim;
    ex.cov = covariance_structure(model);
    ex.D = ex.cov.D();
    ex.Q = Q;
    ex.u = u;
    ex.alpha = Eigen::VectorXd::Zero(ex.d + 1);
    ex.det_lambda1 = ex.cov.lambda1.diagonal().prod();

    const int d = ex.d;
    const int N = ex.D - d;
    const int nt = tri_size(d);

    // one pass over shared draws: exactly one index indicator fires per
    // draw, so all k tables fill from the same stream
    std::vector<Eigen::VectorXi> indices = multi_indices_up_to(N, Q);
    const std::size_t m = indices.size();
    std::vector<std::vector<RunningStat>> stats(d + 1, std::vector<RunningStat>(m));

    Rng rng(split_seed(seed, 0x65787031ULL));
    Eigen::MatrixXd herm(N, Q + 1);
    std::vector<std::vector<double>> contrib(d + 1, std::vector<double>(m));
    for (long it = 0; it < n_mc / 2; ++it) {
        Eigen::VectorXd y = rng.normal_vector(N);
        for (auto& c : contrib) std::fill(c.begin(), c.end(), 0.0);
        for (int s = 0; s < 2; ++s) {
            Eigen::VectorXd ys = s == 0 ? y : Eigen::VectorXd(-y);
            Eigen::VectorXd z = ex.cov.lambda2 * ys;
            Eigen::MatrixXd x(d, d);
            for (int i = 0; i < d; ++i)
                for (int j = i; j < d; ++j) {
                    x(i, j) = z[tri_index(i, j, d)];
                    x(j, i) = z[tri_index(i, j, d)];
                }
            bool level_ok = u.above(z[nt]);
            if (level_ok) {
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x, Eigen::EigenvaluesOnly);
                int index = 0;
                for (Eigen::Index i = 0; i < d; ++i)
                    if (es.eigenvalues()[i] < 0) ++index;
                double fv = (index % 2 == 0 ? 1.0 : -1.0) * x.determinant();
                for (int i = 0; i < N; ++i) {
                    herm(i, 0) = 1.0;
                    if (Q >= 1) herm(i, 1) = ys[i];
                    for (int kk = 1; kk < Q; ++kk)
                        herm(i, kk + 1) = ys[i] * herm(i, kk) - kk * herm(i, kk - 1);
                }
                for (std::size_t j = 0; j < m; ++j) {
                    double p = fv;
                    const Eigen::VectorXi& n = indices[j];
                    for (int i = 0; i < N; ++i) p *= herm(i, n[i]);
                    contrib[index][j] += 0.5 * p;
                }
            }
        }
        for (int k = 0; k <= d; ++k)
            for (std::size_t j = 0; j < m; ++j) stats[k][j].add(contrib[k][j]);
    }

    for (int k = 0; k <= d; ++k) {
        CoeffTable table;
        table.N = N;
        table.Q = Q;
        table.indices = indices;
        table.coeffs.resize(m);
        table.flagged_zero.resize(m);
        for (std::size_t j = 0; j < m; ++j) {
            MomentEstimate e = stats[k][j].estimate();
            double fact = multi_factorial(indices[j]);
            e.mean /= fact;
            e.stderr_ /= fact;
            e.n_samples = n_mc;
            table.coeffs[j] = e;
            table.flagged_zero[j] = std::abs(e.mean) < 3.0 * e.stderr_;
        }
        ex.per_k.push_back(std::move(table));
    }
    return ex;
}

Eigen::MatrixXd gamma_at(const SpectralModel& model, const CovarianceStructure& cov,
                         const Eigen::VectorXd& t) {
    Eigen::MatrixXd sigma = cross_covariance(covariance_at(model, t));
    Eigen::MatrixXd tmp = cov.lambda.triangularView<Eigen::Lower>().solve(sigma);
    return cov.lambda.triangularView<Eigen::Lower>().solve(tmp.transpose()).transpose();
}

double chaotic_variance_term(const SpectralModel& model, const ChaosExpansion& ex, int q,
                             double quad_tol) {
    if (q > ex.Q) throw CapabilityError("chaotic_variance_term: q exceeds expansion order");
    if (ex.Q > 6) throw CapabilityError("chaotic_variance_term: Q <= 6");
    if (model.dim > 2) throw CapabilityError("chaotic_variance_term: d <= 2");
    if (q == 0) return 0.0;

    std::vector<Eigen::VectorXi> idx;
    std::vector<double> a;
    for (const Eigen::VectorXi& n : multi_indices_of_order(ex.D, q)) {
        double v = ex.a_alpha(n);
        if (v != 0.0) {
            idx.push_back(n);
            a.push_back(v);
        }
    }
    if (idx.empty()) return 0.0;

    auto integrand = [&](const Eigen::VectorXd& t) {
        Eigen::MatrixXd gamma = gamma_at(model, ex.cov, t);
        double s = 0.0;
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < idx.size(); ++j)
                s += a[i] * a[j] * mehler_cov(idx[i], idx[j], gamma);
        return s;
    };

    double L = 12.0 * correlation_length(model);
    if (model.dim == 1) {
        Eigen::VectorXd t(1);
        double half = integrate_adaptive(
            [&](double x) {
                Eigen::VectorXd tt(1);
                tt << x;
                return integrand(tt);
            },
            0.0, L, quad_tol * 0.5);
        return 2.0 * half; // integrand is even in t
    }
    // d = 2: fixed angular grid over the half circle (the integrand is even
    // in t, and smooth periodic in the angle), adaptive radial
    const int n_angular = 24;
    double total = 0.0;
    for (int ia = 0; ia < n_angular; ++ia) {
        double ang = M_PI * (ia + 0.5) / n_angular;
        Eigen::VectorXd mu(2);
        mu << std::cos(ang), std::sin(ang);
        total += integrate_adaptive(
            [&](double rho) { return integrand(rho * mu) * rho; }, 0.0, L,
            quad_tol / n_angular);
    }
    return 2.0 * M_PI / n_angular * total;
}

SpectralKernelSet::SpectralKernelSet(const CovarianceStructure& cov)
    : d(cov.dim), D(cov.D()), lambda1(cov.lambda1), lambda2(cov.lambda2) {}

Eigen::VectorXcd SpectralKernelSet::all(const Eigen::VectorXd& lambda) const {
    const int nt = tri_size(d);
    Eigen::VectorXd nu_upper(nt + 1);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) nu_upper[tri_index(i, j, d)] = -lambda[i] * lambda[j];
    nu_upper[nt] = 1.0;

    Eigen::VectorXd lower = lambda1.triangularView<Eigen::Lower>().solve(lambda);
    Eigen::VectorXd upper = lambda2.triangularView<Eigen::Lower>().solve(nu_upper);

    Eigen::VectorXcd out(D);
    for (int i = 0; i < d; ++i) out[i] = std::complex<double>(0.0, lower[i]);
    for (int i = 0; i < nt + 1; ++i) out[d + i] = std::complex<double>(upper[i], 0.0);
    return out;
}

double gamma_entry_from_kernels(const SpectralModel& model, const SpectralKernelSet& kernels,
                                int i, int j, double t) {
    if (model.dim != 1) throw CapabilityError("kernel reconstruction implemented for d = 1");
    double L = model.is_gaussian() ? 10.0 : model.radius + std::abs(model.center);
    auto f = [&](double lam) {
        Eigen::VectorXd lv(1);
        lv << lam;
        Eigen::VectorXcd psi = kernels.all(lv);
        std::complex<double> ph(std::cos(t * lam), -std::sin(t * lam)); // e^{-i t lambda}
        return (psi[i] * std::conj(psi[j]) * ph).real() * model.density(lv);
    };
    return integrate_adaptive(f, -L, L, 1e-10);
}

double limit_variance_convolution(const SpectralModel& model, const ChaosExpansion& ex, int q,
                                  double quad_tol) {
    if (model.dim != 1) throw CapabilityError("limit_variance_convolution: d = 1 only");
    if (q > 3) throw CapabilityError("limit_variance_convolution: q <= 3");
    if (q > ex.Q) throw CapabilityError("limit_variance_convolution: q exceeds expansion order");
    if (q == 0) return 0.0;

    SpectralKernelSet kernels(ex.cov);

    // weighted leg orderings: P_q(l) = sum_n a(n) n! sum_{m in I_n} prod_i psi~_{m_i}(l_i)
    struct Term {
        std::vector<int> legs; // one ordering
        double weight;
    };
    std::vector<Term> terms;
    for (const Eigen::VectorXi& n : multi_indices_of_order(ex.D, q)) {
        double v = ex.a_alpha(n);
        if (v == 0.0) continue;
        std::vector<int> legs = legs_of(n);
        double w = v * multi_factorial(n);
        std::sort(legs.begin(), legs.end());
        do {
            terms.push_back({legs, w});
        } while (std::next_permutation(legs.begin(), legs.end()));
    }
    if (terms.empty()) return 0.0;

    auto p_q = [&](const std::vector<Eigen::VectorXd>& lambdas) {
        std::vector<Eigen::VectorXcd> psi(q);
        for (int i = 0; i < q; ++i) psi[i] = kernels.all(lambdas[i]);
        std::complex<double> p(0.0, 0.0);
        for (const Term& term : terms) {
            std::complex<double> prod(term.weight, 0.0);
            for (int i = 0; i < q; ++i) prod *= psi[i][term.legs[i]];
            p += prod;
        }
        return p;
    };

    auto dens = [&](double x) {
        Eigen::VectorXd lv(1);
        lv << x;
        return model.density(lv);
    };

    const double pref = 2.0 * M_PI / multi_factorial(Eigen::VectorXi::Constant(1, q));
    double L = model.is_gaussian() ? 9.0 : model.radius + std::abs(model.center);

    if (q == 1) {
        std::vector<Eigen::VectorXd> lam(1, Eigen::VectorXd::Zero(1));
        return pref * std::norm(p_q(lam)) * dens(0.0);
    }
    if (q == 2) {
        auto g = [&](double x) {
            std::vector<Eigen::VectorXd> lam(2, Eigen::VectorXd::Zero(1));
            lam[0] << x;
            lam[1] << -x;
            return std::norm(p_q(lam)) * dens(x) * dens(-x);
        };
        return pref * integrate_adaptive(g, -L, L, quad_tol);
    }
    auto g = [&](double x, double y) {
        std::vector<Eigen::VectorXd> lam(3, Eigen::VectorXd::Zero(1));
        lam[0] << x;
        lam[1] << y;
        lam[2] << -x - y;
        return std::norm(p_q(lam)) * dens(x) * dens(y) * dens(-x - y);
    };
    return pref * integrate_adaptive_2d(g, -L, L, -L, L, quad_tol);
}

} // namespace critpt
