#pragma once

#include <Eigen/Core>

namespace critpt {

// Probabilists' Hermite polynomial H_n, orthogonal w.r.t. the standard
// normal weight: H_{n+1}(x) = x H_n(x) - n H_{n-1}(x).
inline double hermite(int n, double x) {
    if (n == 0) return 1.0;
    double hm = 1.0, h = x;
    for (int k = 1; k < n; ++k) {
        double next = x * h - static_cast<double>(k) * hm;
        hm = h;
        h = next;
    }
    return h;
}

// H_n(0): zero for odd n, (-1)^p (2p-1)!! for n = 2p.
inline double hermite_at_zero(int n) {
    if (n % 2 == 1) return 0.0;
    int p = n / 2;
    double v = 1.0;
    for (int k = 1; k <= 2 * p - 1; k += 2) v *= static_cast<double>(k);
    return (p % 2 == 0) ? v : -v;
}

// tensor product prod_i H_{n_i}(y_i)
inline double hermite_tensor(const Eigen::VectorXi& n, const Eigen::VectorXd& y) {
    double p = 1.0;
    for (Eigen::Index i = 0; i < n.size(); ++i) p *= hermite(n[i], y[i]);
    return p;
}

} // namespace critpt
