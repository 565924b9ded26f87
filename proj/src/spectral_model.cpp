#include "critpt/spectral_model.hpp"

#include "critpt/errors.hpp"
#include "critpt/hermite.hpp"
#include "critpt/quadrature.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>

namespace critpt {

std::string family_name(SpectralFamily f) {
    switch (f) {
        case SpectralFamily::gaussian_isotropic: return "gaussian_isotropic";
        case SpectralFamily::gaussian_anisotropic: return "gaussian_anisotropic";
        case SpectralFamily::bump_compact: return "bump_compact";
    }
    return "?";
}

SpectralFamily family_from_name(const std::string& name) {
    if (name == "gaussian_isotropic") return SpectralFamily::gaussian_isotropic;
    if (name == "gaussian_anisotropic") return SpectralFamily::gaussian_anisotropic;
    if (name == "bump_compact") return SpectralFamily::bump_compact;
    throw std::invalid_argument("unknown spectral family: " + name);
}

SpectralModel SpectralModel::gaussian_iso(int d, double mass) {
    SpectralModel m;
    m.dim = d;
    m.family = SpectralFamily::gaussian_isotropic;
    m.total_mass = mass;
    return m;
}

SpectralModel SpectralModel::gaussian_aniso(const Eigen::VectorXd& scales, double mass) {
    SpectralModel m;
    m.dim = static_cast<int>(scales.size());
    m.family = SpectralFamily::gaussian_anisotropic;
    m.axis_scales = scales;
    m.total_mass = mass;
    return m;
}

SpectralModel SpectralModel::bump(int d, double radius, double mass, double center) {
    SpectralModel m;
    m.dim = d;
    m.family = SpectralFamily::bump_compact;
    m.radius = radius;
    m.center = center;
    m.total_mass = mass;
    return m;
}

Eigen::VectorXd SpectralModel::scales() const {
    if (family == SpectralFamily::gaussian_anisotropic) return axis_scales;
    return Eigen::VectorXd::Ones(dim);
}

namespace {

// normalization of exp(-1/(1 - ||x/R||^2)) over the ball of radius R,
// memoized per (d, R)
double bump_norm_const(int d, double R) {
    static std::mutex mu;
    static std::map<std::pair<int, double>, double> cache;
    {
        std::scoped_lock lock(mu);
        auto it = cache.find({d, R});
        if (it != cache.end()) return it->second;
    }
    double surface = d == 1 ? 2.0 : (d == 2 ? 2.0 * M_PI : 4.0 * M_PI);
    auto radial = [&](double rho) {
        double s = rho / R;
        double core = std::exp(-1.0 / (1.0 - s * s));
        return core * std::pow(rho, d - 1);
    };
    double z = surface * integrate_adaptive(radial, 0.0, R * (1.0 - 1e-14), 1e-12);
    std::scoped_lock lock(mu);
    cache[{d, R}] = z;
    return z;
}

double bump_core(const Eigen::VectorXd& x, double R) {
    double s2 = x.squaredNorm() / (R * R);
    if (s2 >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - s2));
}

} // namespace

double SpectralModel::density(const Eigen::VectorXd& lambda) const {
    switch (family) {
        case SpectralFamily::gaussian_isotropic:
            return total_mass * std::pow(2.0 * M_PI, -0.5 * dim) *
                   std::exp(-0.5 * lambda.squaredNorm());
        case SpectralFamily::gaussian_anisotropic: {
            double v = total_mass;
            for (int l = 0; l < dim; ++l) {
                double s = axis_scales[l];
                if (s <= 0) return 0.0; // degenerate diagnostic fixtures
                v *= std::exp(-0.5 * lambda[l] * lambda[l] / (s * s)) / (s * std::sqrt(2.0 * M_PI));
            }
            return v;
        }
        case SpectralFamily::bump_compact: {
            double z = bump_norm_const(dim, radius);
            if (center == 0.0) return total_mass * bump_core(lambda, radius) / z;
            Eigen::VectorXd shift = Eigen::VectorXd::Zero(dim);
            shift[0] = center;
            return 0.5 * total_mass *
                   (bump_core(lambda - shift, radius) + bump_core(lambda + shift, radius)) / z;
        }
    }
    return 0.0;
}

namespace {

double double_factorial(int n) { // (-1)!! = 1
    double v = 1.0;
    for (int k = n; k > 1; k -= 2) v *= k;
    return v;
}

// adaptive tensor quadrature of g over [-L, L]^d, d <= 3
double integrate_box(const std::function<double(const Eigen::VectorXd&)>& g, int d, double L,
                     double tol) {
    Eigen::VectorXd x(d);
    if (d == 1) {
        return integrate_adaptive([&](double a) { x[0] = a; return g(x); }, -L, L, tol);
    }
    if (d == 2) {
        return integrate_adaptive_2d(
            [&](double a, double b) {
                x[0] = a;
                x[1] = b;
                return g(x);
            },
            -L, L, -L, L, tol);
    }
    if (d == 3) {
        auto outer = [&](double a) {
            return integrate_adaptive_2d(
                [&](double b, double c) {
                    x[0] = a;
                    x[1] = b;
                    x[2] = c;
                    return g(x);
                },
                -L, L, -L, L, tol / (2.0 * L));
        };
        return integrate_adaptive(outer, -L, L, tol);
    }
    throw CapabilityError("quadrature supports d <= 3");
}

double bump_support_bound(const SpectralModel& m) { return m.radius + std::abs(m.center); }

} // namespace

double spectral_moment(const SpectralModel& model, const Eigen::VectorXi& alpha) {
    if (alpha.size() != model.dim) throw std::invalid_argument("spectral_moment: bad multi-index");
    if (alpha.sum() > 4 || alpha.minCoeff() < 0)
        throw std::invalid_argument("spectral_moment: |alpha| must be in [0, 4]");
    for (int l = 0; l < alpha.size(); ++l)
        if (alpha[l] % 2 == 1) return 0.0; // odd moment of an even density

    if (model.is_gaussian()) {
        Eigen::VectorXd s = model.scales();
        double v = model.total_mass;
        for (int l = 0; l < model.dim; ++l)
            v *= std::pow(s[l], alpha[l]) * double_factorial(alpha[l] - 1);
        return v;
    }
    double L = bump_support_bound(model);
    double scale = model.total_mass * std::pow(L, alpha.sum());
    auto g = [&](const Eigen::VectorXd& lam) {
        double p = model.density(lam);
        for (int l = 0; l < model.dim; ++l) p *= std::pow(lam[l], alpha[l]);
        return p;
    };
    return integrate_box(g, model.dim, L, 1e-11 * std::max(1.0, scale));
}

CovarianceStructure covariance_structure(const SpectralModel& model) {
    const int d = model.dim;
    const int nt = tri_size(d);
    const int D = d + nt + 1;
    CovarianceStructure cs;
    cs.dim = d;
    cs.xi = Eigen::MatrixXd::Zero(D, D);
    cs.moments4 = Tensor4(d);

    auto m = [&](int i, int j, int k, int l) {
        Eigen::VectorXi a = Eigen::VectorXi::Zero(d);
        if (i >= 0) a[i]++;
        if (j >= 0) a[j]++;
        if (k >= 0) a[k]++;
        if (l >= 0) a[l]++;
        return spectral_moment(model, a);
    };

    // Var X': E[X'_i X'_j] = m_{e_i + e_j}
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) cs.xi(i, j) = m(i, j, -1, -1);

    // Var X'' and r4(0): E[X''_ij X''_kl] = m_{e_i+e_j+e_k+e_l}
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l) cs.moments4(i, j, k, l) = m(i, j, k, l);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j)
            for (int k = 0; k < d; ++k)
                for (int l = k; l < d; ++l)
                    cs.xi(d + tri_index(i, j, d), d + tri_index(k, l, d)) =
                        cs.moments4(i, j, k, l);

    // E[X X''_ij] = r_ij(0) = -m_{e_i+e_j}; E[X X] = total mass
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            cs.xi(D - 1, d + tri_index(i, j, d)) = -m(i, j, -1, -1);
            cs.xi(d + tri_index(i, j, d), D - 1) = -m(i, j, -1, -1);
        }
    cs.xi(D - 1, D - 1) = model.total_mass;
    // Cov(X', (X'', X)) stays exactly 0: odd spectral moments vanish.

    auto chol_block = [](const Eigen::MatrixXd& block, const std::string& name) {
        Eigen::LLT<Eigen::MatrixXd> llt(block);
        if (llt.info() != Eigen::Success)
            throw DegenerateModelError(name, "covariance block is not positive definite");
        Eigen::MatrixXd L = llt.matrixL();
        double recon = (L * L.transpose() - block).cwiseAbs().maxCoeff();
        double scale = std::max(1.0, block.cwiseAbs().maxCoeff());
        if (recon > 1e-10 * scale)
            throw DegenerateModelError(name, "Cholesky reconstruction error too large");
        return L;
    };
    cs.lambda1 = chol_block(cs.xi.topLeftCorner(d, d), "Var(X')");
    cs.lambda2 = chol_block(cs.xi.bottomRightCorner(D - d, D - d), "Var(X'', X)");
    cs.lambda = Eigen::MatrixXd::Zero(D, D);
    cs.lambda.topLeftCorner(d, d) = cs.lambda1;
    cs.lambda.bottomRightCorner(D - d, D - d) = cs.lambda2;
    return cs;
}

namespace {

// all partial-derivative multi-indices of total order <= 4
std::vector<Eigen::VectorXi> derivative_indices(int d) {
    std::vector<Eigen::VectorXi> out;
    std::function<void(Eigen::VectorXi&, int, int)> rec = [&](Eigen::VectorXi& a, int pos,
                                                              int left) {
        if (pos == d) {
            out.push_back(a);
            return;
        }
        for (int v = 0; v <= left; ++v) {
            a[pos] = v;
            rec(a, pos + 1, left - v);
        }
        a[pos] = 0;
    };
    Eigen::VectorXi a = Eigen::VectorXi::Zero(d);
    rec(a, 0, 4);
    return out;
}

// d^beta r(t) for the gaussian families: r factorizes per axis into
// exp(-s^2 t^2 / 2), whose n-th derivative is (-1)^n s^n H_n(s t) exp(-s^2 t^2/2).
double gaussian_deriv(const SpectralModel& model, const Eigen::VectorXd& t,
                      const Eigen::VectorXi& beta) {
    Eigen::VectorXd s = model.scales();
    double v = model.total_mass;
    for (int l = 0; l < model.dim; ++l) {
        double x = s[l] * t[l];
        double sign = beta[l] % 2 == 0 ? 1.0 : -1.0;
        v *= sign * std::pow(s[l], beta[l]) * hermite(beta[l], x) * std::exp(-0.5 * x * x);
    }
    return v;
}

// d^beta r(t) = int lambda^beta f(lambda) Re(i^|beta| e^{i lambda.t}) dlambda
double fourier_deriv(const SpectralModel& model, const Eigen::VectorXd& t,
                     const Eigen::VectorXi& beta) {
    int phase = beta.sum() % 4;
    double L = bump_support_bound(model);
    auto g = [&](const Eigen::VectorXd& lam) {
        double p = model.density(lam);
        for (int l = 0; l < model.dim; ++l) p *= std::pow(lam[l], beta[l]);
        double x = lam.dot(t);
        switch (phase) {
            case 0: return p * std::cos(x);
            case 1: return -p * std::sin(x);
            case 2: return -p * std::cos(x);
            default: return p * std::sin(x);
        }
    };
    double scale = model.total_mass * std::pow(L, beta.sum());
    return integrate_box(g, model.dim, L, 1e-10 * std::max(1.0, scale));
}

} // namespace

CovarianceAtLag covariance_at(const SpectralModel& model, const Eigen::VectorXd& t) {
    const int d = model.dim;
    CovarianceAtLag c;
    c.t = t;
    c.r1 = Eigen::VectorXd::Zero(d);
    c.r2 = Eigen::MatrixXd::Zero(d, d);
    c.r3 = Tensor3(d);
    c.r4 = Tensor4(d);

    auto deriv = [&](const Eigen::VectorXi& beta) {
        return model.is_gaussian() ? gaussian_deriv(model, t, beta) : fourier_deriv(model, t, beta);
    };

    double psi = 0.0;
    for (const Eigen::VectorXi& beta : derivative_indices(d)) {
        double v = deriv(beta);
        psi = std::max(psi, std::abs(v));
        int order = beta.sum();
        // scatter into the symmetric tensor of its order
        std::vector<int> idx;
        for (int l = 0; l < d; ++l)
            for (int r = 0; r < beta[l]; ++r) idx.push_back(l);
        switch (order) {
            case 0: c.r0 = v; break;
            case 1: c.r1[idx[0]] = v; break;
            case 2:
                c.r2(idx[0], idx[1]) = v;
                c.r2(idx[1], idx[0]) = v;
                break;
            case 3: {
                std::sort(idx.begin(), idx.end());
                do {
                    c.r3(idx[0], idx[1], idx[2]) = v;
                } while (std::next_permutation(idx.begin(), idx.end()));
                break;
            }
            case 4: {
                std::sort(idx.begin(), idx.end());
                do {
                    c.r4(idx[0], idx[1], idx[2], idx[3]) = v;
                } while (std::next_permutation(idx.begin(), idx.end()));
                break;
            }
        }
    }
    c.psi = psi;
    return c;
}

Eigen::MatrixXd cross_covariance(const CovarianceAtLag& c) {
    const int d = static_cast<int>(c.t.size());
    const int nt = tri_size(d);
    const int D = d + nt + 1;
    Eigen::MatrixXd S(D, D);
    // E[X'_i(0) X'_j(t)] = -r_ij(t)
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) S(i, j) = -c.r2(i, j);
    for (int i = 0; i < d; ++i) {
        // E[X'_i(0) X(t)] = -r_i(t); E[X(0) X'_i(t)] = r_i(t)
        S(i, D - 1) = -c.r1[i];
        S(D - 1, i) = c.r1[i];
        for (int k = 0; k < d; ++k)
            for (int l = k; l < d; ++l) {
                // E[X'_i(0) X''_kl(t)] = -r_ikl(t); E[X''_kl(0) X'_i(t)] = r_ikl(t)
                S(i, d + tri_index(k, l, d)) = -c.r3(i, k, l);
                S(d + tri_index(k, l, d), i) = c.r3(i, k, l);
            }
    }
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            for (int k = 0; k < d; ++k)
                for (int l = k; l < d; ++l)
                    S(d + tri_index(i, j, d), d + tri_index(k, l, d)) = c.r4(i, j, k, l);
            S(d + tri_index(i, j, d), D - 1) = c.r2(i, j);
            S(D - 1, d + tri_index(i, j, d)) = c.r2(i, j);
        }
    S(D - 1, D - 1) = c.r0;
    return S;
}

double correlation_length(const SpectralModel& model) {
    const int d = model.dim;
    Eigen::MatrixXd var_grad(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            Eigen::VectorXi a = Eigen::VectorXi::Zero(d);
            a[i]++;
            a[j]++;
            var_grad(i, j) = spectral_moment(model, a);
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(var_grad);
    double lmax = es.eigenvalues().maxCoeff();
    if (lmax <= 0) throw DegenerateModelError("Var(X')", "not positive definite");
    return 1.0 / std::sqrt(lmax);
}

namespace {

std::vector<Eigen::VectorXd> direction_grid(int d) {
    std::vector<Eigen::VectorXd> dirs;
    if (d == 1) {
        dirs.push_back(Eigen::VectorXd::Ones(1));
        dirs.push_back(-Eigen::VectorXd::Ones(1));
    } else if (d == 2) {
        int n = 128 * d;
        for (int i = 0; i < n; ++i) {
            double a = 2.0 * M_PI * i / n;
            Eigen::VectorXd mu(2);
            mu << std::cos(a), std::sin(a);
            dirs.push_back(mu);
        }
    } else {
        // Fibonacci sphere
        int n = 128 * d;
        double ga = M_PI * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < n; ++i) {
            double z = 1.0 - 2.0 * (i + 0.5) / n;
            double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            Eigen::VectorXd mu(3);
            mu << r * std::cos(ga * i), r * std::sin(ga * i), z;
            dirs.push_back(mu);
        }
    }
    return dirs;
}

// average of g over the unit sphere directions (coarse fixed grids)
double sphere_integral(int d, const std::function<double(const Eigen::VectorXd&)>& g,
                       int n_angular) {
    if (d == 1) {
        Eigen::VectorXd e = Eigen::VectorXd::Ones(1);
        return g(e) + g(-e);
    }
    if (d == 2) {
        double s = 0;
        for (int i = 0; i < n_angular; ++i) {
            double a = 2.0 * M_PI * i / n_angular;
            Eigen::VectorXd mu(2);
            mu << std::cos(a), std::sin(a);
            s += g(mu);
        }
        return s * 2.0 * M_PI / n_angular;
    }
    double s = 0;
    double ga = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n_angular; ++i) {
        double z = 1.0 - 2.0 * (i + 0.5) / n_angular;
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        Eigen::VectorXd mu(3);
        mu << r * std::cos(ga * i), r * std::sin(ga * i), z;
        s += g(mu);
    }
    return s * 4.0 * M_PI / n_angular;
}

} // namespace

AssumptionReport check_assumptions(const SpectralModel& model) {
    const int d = model.dim;
    AssumptionReport rep;

    // (A1) Var X' non-degenerate
    try {
        Eigen::MatrixXd vg(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                Eigen::VectorXi a = Eigen::VectorXi::Zero(d);
                a[i]++;
                a[j]++;
                vg(i, j) = spectral_moment(model, a);
            }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(vg);
        double lmin = es.eigenvalues().minCoeff();
        double lmax = es.eigenvalues().maxCoeff();
        rep.a1.statistic = lmin;
        rep.a1.pass = lmin > 1e-12 * std::max(1.0, lmax);
        rep.a1.detail = "min eigenvalue of Var(X')";
    } catch (const std::exception& e) {
        rep.a1 = {false, 0.0, std::string("Var(X') evaluation failed: ") + e.what()};
    }
    if (!rep.a1.pass) {
        rep.a3 = {false, 0.0, "skipped: (A1) failed"};
        rep.a4.statistic = model.density(Eigen::VectorXd::Zero(d));
        rep.a4.pass = rep.a4.statistic > 1e-12 * model.total_mass;
        rep.a4.detail = "f(0)";
        rep.a5 = {false, 0.0, "skipped: (A1) failed"};
        rep.a6 = {false, 0.0, "skipped: (A1) failed"};
        return rep;
    }

    // (A3) integral of Psi over R^d, integrated in shells until the tail
    // contribution is negligible or a cap is reached
    {
        const int n_radial = model.is_gaussian() ? 24 : 12;
        const int n_angular = model.is_gaussian() ? 32 : 8;
        double total = 0.0;
        double last_shell = 0.0;
        double r_lo = 0.0;
        bool converged = false;
        for (int shell = 0; shell < 12; ++shell) {
            double r_hi = r_lo == 0.0 ? 1.0 : 2.0 * r_lo;
            FixedRule rule = gauss_legendre(n_radial, std::max(r_lo, 1e-9), r_hi);
            double s = 0.0;
            for (int i = 0; i < n_radial; ++i) {
                double rho = rule.nodes[i];
                double ang = sphere_integral(
                    d,
                    [&](const Eigen::VectorXd& mu) { return covariance_at(model, rho * mu).psi; },
                    n_angular);
                s += rule.weights[i] * ang * std::pow(rho, d - 1);
            }
            total += s;
            last_shell = s;
            r_lo = r_hi;
            if (shell >= 3 && last_shell < 1e-6 * std::max(total, 1e-300)) {
                converged = true;
                break;
            }
        }
        rep.a3.statistic = total;
        rep.a3.pass = converged;
        rep.a3.detail = converged ? "integral of Psi (tail below 1e-6 relative)"
                                  : "Psi tail did not decay within the shell budget";
    }

    // (A4) spectral density positive at 0
    rep.a4.statistic = model.density(Eigen::VectorXd::Zero(d));
    rep.a4.pass = rep.a4.statistic > 1e-12 * model.total_mass;
    rep.a4.detail = "f(0)";

    // (A5) Var(X''(0) mu) N.D. for every direction on the grid
    {
        CovarianceStructure cs = covariance_structure(model);
        double min_eig = std::numeric_limits<double>::infinity();
        for (const Eigen::VectorXd& mu : direction_grid(d)) {
            Eigen::MatrixXd v = cs.moments4.contract_last_two(mu);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v);
            min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
        }
        double scale = cs.moments4.max_abs();
        rep.a5.statistic = min_eig;
        rep.a5.pass = min_eig > 1e-10 * std::max(1.0, scale);
        rep.a5.detail = "min over directions of min eigenvalue of Var(X'' mu)";
    }

    // (A6) integrability of ||r4(t) - r4(0)|| / ||t||^d at 0, max-abs norm,
    // dyadic shells 2^-j <= ||t|| < 2^-j+1 declared convergent when the
    // shell sums decay geometrically
    {
        Tensor4 r4_0 = covariance_at(model, Eigen::VectorXd::Zero(d)).r4;
        const int j_max = model.is_gaussian() ? 20 : 10;
        const int n_radial = 4;
        const int n_angular = model.is_gaussian() ? (d == 1 ? 2 : 16) : (d == 1 ? 2 : 8);
        std::vector<double> shells;
        for (int j = 1; j <= j_max; ++j) {
            double lo = std::pow(2.0, -j), hi = std::pow(2.0, -j + 1);
            FixedRule rule = gauss_legendre(n_radial, lo, hi);
            double s = 0.0;
            for (int i = 0; i < n_radial; ++i) {
                double rho = rule.nodes[i];
                double ang = sphere_integral(
                    d,
                    [&](const Eigen::VectorXd& mu) {
                        Tensor4 diff = covariance_at(model, rho * mu).r4;
                        diff -= r4_0;
                        return diff.max_abs() / std::pow(rho, d);
                    },
                    n_angular);
                s += rule.weights[i] * ang * std::pow(rho, d - 1);
            }
            shells.push_back(s);
        }
        double total = 0.0;
        for (double s : shells) total += s;
        bool geometric = true;
        int checked = 0;
        for (std::size_t j = 3; j + 1 < shells.size(); ++j) {
            if (shells[j] <= 1e-14 * std::max(total, 1e-300)) break; // below noise floor
            ++checked;
            if (shells[j + 1] > 0.9 * shells[j]) geometric = false;
        }
        rep.a6.statistic = total;
        rep.a6.pass = geometric && checked > 0;
        rep.a6.detail = "dyadic shell sums of ||r4(t)-r4(0)||/||t||^d";
    }
    return rep;
}

} // namespace critpt
