#pragma once

#include "critpt/census.hpp"
#include "critpt/kac_rice.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

namespace critpt {

struct ExperimentConfig {
    SpectralModel model;
    std::vector<double> T_ladder; // strictly increasing
    std::vector<Level> levels;
    std::vector<Eigen::VectorXd> alphas; // each of size d + 1
    int replications = 2;
    int atoms = 4000;
    std::uint64_t master_seed = 1;
    int threads = 1;
    CensusOptions census;
    bool check_euler = true; // d <= 2: verify chi = 1 on every retained seed

    void validate() const;
};

// One realization per replicate, censused at every rung of the T ladder, so
// per-seed trajectories are counts on nested boxes of the same field.
struct ExperimentResult {
    ExperimentConfig config;

    struct Replicate {
        std::uint64_t stream = 0;              // retained seed stream index
        std::vector<Eigen::VectorXi> counts;   // per T: (levels x (d+1)) flattened rows
        std::vector<long> chi;                 // per T
    };
    std::vector<Replicate> replicates;
    int replacements = 0;

    // counts for one (T index, level index) across replicates: R x (d+1)
    Eigen::MatrixXi counts_matrix(int t_index, int level_index) const;
    // normalized combination samples C_u^alpha with divisor sqrt((2T)^d)
    std::vector<double> normalized_samples(int t_index, int level_index,
                                           const Eigen::VectorXd& alpha) const;
    int level_index(const Level& u) const;
    int t_index(double T) const;
};

ExperimentResult run_replications(const ExperimentConfig& config);

struct CltDiagnostics {
    long n = 0;
    double mean = 0, variance = 0;
    double skewness = 0, excess_kurtosis = 0, edf_distance = 0;
    bool zero_variance_anomaly = false; // contradicts positivity at u > -inf
};

CltDiagnostics clt_diagnostics(const ExperimentResult& result, const Eigen::VectorXd& alpha,
                               double T, const Level& u);

// self-test entry: diagnostics of externally supplied standardized samples
CltDiagnostics clt_diagnostics_of_samples(const std::vector<double>& samples);

struct VarianceScalingRow {
    double T = 0;
    double vhat = 0;    // Var(C_u^alpha) at this T
    double stderr_ = 0; // stderr of vhat
};

std::vector<VarianceScalingRow> variance_scaling(const ExperimentResult& result,
                                                 const Eigen::VectorXd& alpha, const Level& u);

struct AsConvergence {
    std::vector<double> T;                        // ladder
    std::vector<std::vector<double>> ratios;      // per T: per-seed Crt/E[Crt]
    std::vector<double> median_abs_dev;           // per T: median |ratio - 1|
    std::vector<bool> applicable;                 // false when E[Crt] = 0
};

AsConvergence as_convergence(const ExperimentResult& result, int k, const Level& u,
                             const std::vector<MomentEstimate>& expected_by_T);

} // namespace critpt
