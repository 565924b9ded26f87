#pragma once

#include <Eigen/Core>
#include <cmath>

namespace critpt {

// Row-major position of the (i, j) entry, i <= j, in the packed upper
// triangle of a symmetric d x d matrix. This ordering is shared by every
// module that flattens a Hessian.
inline int tri_index(int i, int j, int d) {
    if (i > j) std::swap(i, j);
    return i * (2 * d - i - 1) / 2 + j;
}

inline int tri_size(int d) { return d * (d + 1) / 2; }

// Dense symmetric 3-tensor, d <= 3 in practice.
class Tensor3 {
public:
    Tensor3() = default;
    explicit Tensor3(int d) : d_(d), v_(Eigen::VectorXd::Zero(d * d * d)) {}
    int dim() const { return d_; }
    double& operator()(int i, int j, int k) { return v_[(i * d_ + j) * d_ + k]; }
    double operator()(int i, int j, int k) const { return v_[(i * d_ + j) * d_ + k]; }
    double max_abs() const { return v_.size() ? v_.cwiseAbs().maxCoeff() : 0.0; }

private:
    int d_ = 0;
    Eigen::VectorXd v_;
};

class Tensor4 {
public:
    Tensor4() = default;
    explicit Tensor4(int d) : d_(d), v_(Eigen::VectorXd::Zero(d * d * d * d)) {}
    int dim() const { return d_; }
    double& operator()(int i, int j, int k, int l) { return v_[((i * d_ + j) * d_ + k) * d_ + l]; }
    double operator()(int i, int j, int k, int l) const {
        return v_[((i * d_ + j) * d_ + k) * d_ + l];
    }
    double max_abs() const { return v_.size() ? v_.cwiseAbs().maxCoeff() : 0.0; }

    // r4(0)_{:,:,mu,mu} style contraction over the last two slots.
    Eigen::MatrixXd contract_last_two(const Eigen::VectorXd& mu) const {
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d_, d_);
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j)
                for (int k = 0; k < d_; ++k)
                    for (int l = 0; l < d_; ++l) out(i, j) += (*this)(i, j, k, l) * mu[k] * mu[l];
        return out;
    }

    Tensor4& operator-=(const Tensor4& o) {
        v_ -= o.v_;
        return *this;
    }

private:
    int d_ = 0;
    Eigen::VectorXd v_;
};

} // namespace critpt
