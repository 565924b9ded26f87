#pragma once

#include "critpt/errors.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace critpt {

namespace detail {

// Gauss-Kronrod 7-15 nodes/weights on [-1, 1].
inline constexpr double kKronrodNodes[8] = {
    0.000000000000000000000000000000000, 0.207784955007898467600689403773245,
    0.405845151377397166906606412076961, 0.586087235467691130294144838258730,
    0.741531185599394439863864773280788, 0.864864423359769072789712788640926,
    0.949107912342758524526189684047851, 0.991455371120812639206854697526329};
inline constexpr double kKronrodWeights[8] = {
    0.209482141084727828012999174891714, 0.204432940075298892414161999234649,
    0.190350578064785409913256402421014, 0.169004726639267902826583426598550,
    0.140653259715525918745189590510238, 0.104790010322250183839876322541518,
    0.063092092629978553290700663189204, 0.022935322010529224963732008058970};
inline constexpr double kGaussWeights[4] = {
    0.417959183673469387755102040816327, 0.381830050505118944950369775488975,
    0.279705391489276667901467771423780, 0.129484966168869693270611432679082};

struct PanelResult {
    double integral;
    double error;
};

template <typename F>
PanelResult gk15(const F& f, double a, double b) {
    double c = 0.5 * (a + b);
    double h = 0.5 * (b - a);
    double fc = f(c);
    double kron = kKronrodWeights[0] * fc;
    double gauss = kGaussWeights[0] * fc;
    for (int i = 1; i < 8; ++i) {
        double x = h * kKronrodNodes[i];
        double fsum = f(c - x) + f(c + x);
        kron += kKronrodWeights[i] * fsum;
        if (i % 2 == 0) gauss += kGaussWeights[i / 2] * fsum;
    }
    kron *= h;
    gauss *= h;
    double err = std::abs(kron - gauss);
    return {kron, err};
}

template <typename F>
void adapt(const F& f, double a, double b, double tol, int depth, double& sum, double& err_sum) {
    PanelResult p = gk15(f, a, b);
    if (p.error <= tol || depth >= 28) {
        sum += p.integral;
        err_sum += p.error;
        return;
    }
    double c = 0.5 * (a + b);
    adapt(f, a, c, tol * 0.5, depth + 1, sum, err_sum);
    adapt(f, c, b, tol * 0.5, depth + 1, sum, err_sum);
}

} // namespace detail

// Adaptive Gauss-Kronrod on [a, b]. abs_tol is the error budget for the
// whole interval; throws QuadratureError when the budget cannot be met.
template <typename F>
double integrate_adaptive(const F& f, double a, double b, double abs_tol = 1e-10) {
    if (a == b) return 0.0;
    double sum = 0.0, err = 0.0;
    detail::adapt(f, a, b, abs_tol, 0, sum, err);
    if (!(err <= 50 * abs_tol + 1e-300))
        throw QuadratureError("adaptive quadrature did not converge", err);
    return sum;
}

// Iterated 2-D integral over [ax,bx] x [ay,by].
template <typename F2>
double integrate_adaptive_2d(const F2& f, double ax, double bx, double ay, double by,
                             double abs_tol = 1e-8) {
    auto outer = [&](double x) {
        return integrate_adaptive([&](double y) { return f(x, y); }, ay, by,
                                  abs_tol / std::max(1.0, bx - ax));
    };
    return integrate_adaptive(outer, ax, bx, abs_tol);
}

// Nodes of an n-point Gauss-Legendre rule on [a, b] (composite of GK15
// panels is used elsewhere; this plain rule serves fixed-node MC quadrature
// where adaptivity would chase Monte Carlo noise).
struct FixedRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline FixedRule gauss_legendre(int n, double a, double b) {
    FixedRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        // Newton on Legendre polynomial from Chebyshev initial guess.
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (x * p1 - p0) / (x * x - 1.0);
        rule.nodes[n - 1 - i] = 0.5 * (b - a) * x + 0.5 * (a + b);
        rule.weights[n - 1 - i] = (b - a) / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

} // namespace critpt
