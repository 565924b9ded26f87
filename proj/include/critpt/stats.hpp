#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace critpt {

enum class EstimateMethod { mc, quadrature };

struct MomentEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    long n_samples = 0;
    EstimateMethod method = EstimateMethod::mc;
};

// Mean/variance accumulator (Welford).
class RunningStat {
public:
    void add(double x) {
        ++n_;
        double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }
    long count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double stderr_of_mean() const {
        return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    }
    MomentEstimate estimate(EstimateMethod method = EstimateMethod::mc) const {
        return {mean(), stderr_of_mean(), n_, method};
    }

private:
    long n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

// Pairwise summation in a fixed index order: the reduction tree depends only
// on the element count, so results are identical for any thread schedule.
inline double ordered_pairwise_sum(const std::vector<double>& xs, std::size_t lo, std::size_t hi) {
    if (hi - lo <= 8) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += xs[i];
        return s;
    }
    std::size_t mid = lo + (hi - lo) / 2;
    return ordered_pairwise_sum(xs, lo, mid) + ordered_pairwise_sum(xs, mid, hi);
}

inline double ordered_pairwise_sum(const std::vector<double>& xs) {
    return xs.empty() ? 0.0 : ordered_pairwise_sum(xs, 0, xs.size());
}

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

struct SampleMoments {
    long n = 0;
    double mean = 0.0;
    double variance = 0.0;       // unbiased
    double skewness = 0.0;       // g1
    double excess_kurtosis = 0.0; // g2
};

inline SampleMoments sample_moments(const std::vector<double>& xs) {
    SampleMoments out;
    out.n = static_cast<long>(xs.size());
    if (xs.empty()) return out;
    double n = static_cast<double>(xs.size());
    double mean = ordered_pairwise_sum(xs) / n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double x : xs) {
        double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n; m3 /= n; m4 /= n;
    out.mean = mean;
    out.variance = xs.size() > 1 ? m2 * n / (n - 1.0) : 0.0;
    if (m2 > 0) {
        out.skewness = m3 / std::pow(m2, 1.5);
        out.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return out;
}

// Kolmogorov-Smirnov sup distance of the samples against the standard normal.
inline double edf_distance(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double cdf = standard_normal_cdf(xs[i]);
        d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - cdf));
    }
    return d;
}

// stderr of a sample variance (normal-theory approximation with a kurtosis
// correction; good enough for ratio diagnostics).
inline double variance_stderr(const std::vector<double>& xs) {
    SampleMoments m = sample_moments(xs);
    if (m.n < 4 || m.variance <= 0) return 0.0;
    double n = static_cast<double>(m.n);
    double kurt = m.excess_kurtosis + 3.0;
    double var_of_var = m.variance * m.variance * (kurt - (n - 3.0) / (n - 1.0)) / n;
    return var_of_var > 0 ? std::sqrt(var_of_var) : 0.0;
}

} // namespace critpt
