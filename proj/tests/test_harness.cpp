#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "critpt/harness.hpp"

#include <Eigen/Dense>
#include "critpt/rng.hpp"

#include <cmath>

using namespace critpt;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.model = SpectralModel::gaussian_iso(1, 1.0);
    cfg.T_ladder = {4.0, 8.0};
    cfg.levels = {Level::minus_inf(), Level::at(0.0)};
    cfg.alphas = {(Eigen::VectorXd(2) << 1, 0).finished(),
                  (Eigen::VectorXd(2) << 1, 1).finished()};
    cfg.replications = 8;
    cfg.atoms = 600;
    cfg.master_seed = 271828;
    return cfg;
}

} // namespace

TEST_CASE("replication bookkeeping and determinism") {
    ExperimentConfig cfg = small_config();
    ExperimentResult a = run_replications(cfg);
    REQUIRE(a.replicates.size() == 8);
    REQUIRE(a.replicates[0].counts.size() == 2); // both rungs

    ExperimentResult b = run_replications(cfg);
    for (std::size_t r = 0; r < a.replicates.size(); ++r)
        for (int ti = 0; ti < 2; ++ti)
            CHECK((a.replicates[r].counts[ti].array() == b.replicates[r].counts[ti].array()).all());

    SUBCASE("independent of the thread count") {
        cfg.threads = 2;
        ExperimentResult c = run_replications(cfg);
        for (std::size_t r = 0; r < a.replicates.size(); ++r)
            for (int ti = 0; ti < 2; ++ti)
                CHECK((a.replicates[r].counts[ti].array() ==
                       c.replicates[r].counts[ti].array()).all());
    }
}

TEST_CASE("euler identity holds on every retained replicate") {
    ExperimentResult res = run_replications(small_config());
    for (const auto& rep : res.replicates)
        for (long chi : rep.chi) CHECK(chi == 1);
}

TEST_CASE("nested boxes on one stream are monotone in T") {
    ExperimentResult res = run_replications(small_config());
    int li = res.level_index(Level::minus_inf());
    for (const auto& rep : res.replicates) {
        int c0 = rep.counts[0].segment(li * 2, 2).sum();
        int c1 = rep.counts[1].segment(li * 2, 2).sum();
        CHECK(c0 <= c1);
    }
}

TEST_CASE("config validation") {
    ExperimentConfig cfg = small_config();
    cfg.replications = 1;
    CHECK_THROWS_AS(run_replications(cfg), std::invalid_argument);
    cfg = small_config();
    cfg.T_ladder = {8.0, 4.0};
    CHECK_THROWS_AS(run_replications(cfg), std::invalid_argument);
    cfg = small_config();
    cfg.alphas = {Eigen::VectorXd::Ones(4)};
    CHECK_THROWS_AS(run_replications(cfg), std::invalid_argument);
}

TEST_CASE("clt diagnostics self-test on injected standard normals") {
    Rng rng(1007);
    std::vector<double> samples(1000);
    for (double& x : samples) x = rng.normal();
    CltDiagnostics diag = clt_diagnostics_of_samples(samples);
    CHECK(std::abs(diag.skewness) < 0.25);
    CHECK(std::abs(diag.excess_kurtosis) < 0.6);
    CHECK(diag.edf_distance < 1.63 / std::sqrt(1000.0));
    CHECK(std::abs(diag.mean) < 0.15);
    CHECK(diag.variance == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("harness self-test: injected moments reproduce within 4 stderr") {
    Rng rng(2009);
    const int n = 4000;
    std::vector<double> samples(n);
    for (double& x : samples) x = 2.0 + 3.0 * rng.normal();
    SampleMoments m = sample_moments(samples);
    CHECK(std::abs(m.mean - 2.0) <= 4.0 * 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(m.variance - 9.0) <= 4.0 * 9.0 * std::sqrt(2.0 / (n - 1.0)));
}

TEST_CASE("alpha = 0 is a domain error; small R rejected for diagnostics") {
    ExperimentResult res = run_replications(small_config());
    CHECK_THROWS_AS(clt_diagnostics(res, Eigen::VectorXd::Zero(2), 4.0, Level::at(0.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(clt_diagnostics(res, Eigen::VectorXd::Ones(2), 4.0, Level::at(0.0)),
                    std::invalid_argument); // R = 8 < 200
}

TEST_CASE("variance scaling table is well-defined even at R = 2") {
    ExperimentConfig cfg = small_config();
    cfg.replications = 2;
    ExperimentResult res = run_replications(cfg);
    std::vector<VarianceScalingRow> rows =
        variance_scaling(res, (Eigen::VectorXd(2) << 1, 0).finished(), Level::at(0.0));
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows) {
        CHECK(std::isfinite(row.vhat));
        CHECK(row.vhat >= 0.0);
        CHECK(row.stderr_ == 0.0); // flagged: too few samples for a stderr
    }
}

TEST_CASE("empirical covariance of the normalized vector is symmetric PSD") {
    ExperimentConfig cfg = small_config();
    cfg.replications = 40;
    ExperimentResult res = run_replications(cfg);
    int li = res.level_index(Level::at(0.0));
    Eigen::MatrixXi counts = res.counts_matrix(1, li);
    Eigen::MatrixXd x = counts.cast<double>();
    Eigen::RowVectorXd mean = x.colwise().mean();
    Eigen::MatrixXd centered = x.rowwise() - mean;
    Eigen::MatrixXd cov = centered.transpose() * centered / (x.rows() - 1.0);
    CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
}

TEST_CASE("as_convergence: trajectories, medians, and the not-applicable flag") {
    ExperimentConfig cfg = small_config();
    cfg.replications = 12;
    ExperimentResult res = run_replications(cfg);

    std::vector<MomentEstimate> by_T;
    for (double T : cfg.T_ladder)
        by_T.push_back(expected_count(cfg.model, Level::minus_inf(), 1, Box{T, 1}, 100000, 3));
    AsConvergence as = as_convergence(res, 1, Level::minus_inf(), by_T);
    REQUIRE(as.T.size() == 2);
    CHECK(as.applicable[0]);
    CHECK(as.ratios[0].size() == 12);
    CHECK(std::isfinite(as.median_abs_dev[1]));

    // a level nothing exceeds: expected count 0 -> not applicable
    std::vector<MomentEstimate> zero_means;
    for (double T : cfg.T_ladder) {
        (void)T;
        MomentEstimate z;
        z.mean = 0.0;
        z.stderr_ = 0.0;
        zero_means.push_back(z);
    }
    AsConvergence na = as_convergence(res, 1, Level::at(0.0), zero_means);
    CHECK_FALSE(na.applicable[0]);
    CHECK(na.ratios[0].empty());
}

TEST_CASE("mean total count agrees with the Kac-Rice oracle at modest size") {
    ExperimentConfig cfg = small_config();
    cfg.T_ladder = {10.0};
    cfg.replications = 150;
    cfg.atoms = 2000;
    ExperimentResult res = run_replications(cfg);
    MomentEstimate theory =
        expected_count(cfg.model, Level::minus_inf(), std::nullopt, Box{10.0, 1}, 200000, 8);
    int li = res.level_index(Level::minus_inf());
    Eigen::MatrixXi counts = res.counts_matrix(0, li);
    RunningStat stat;
    for (int r = 0; r < counts.rows(); ++r) stat.add(counts.row(r).sum());
    double joint = std::hypot(theory.stderr_, stat.stderr_of_mean());
    CHECK(std::abs(stat.mean() - theory.mean) <= 4.0 * joint);
}
