#include "critpt/harness.hpp"

#include "critpt/errors.hpp"
#include "critpt/rng.hpp"
#include "critpt/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace critpt {

void ExperimentConfig::validate() const {
    if (replications < 2) throw std::invalid_argument("experiment: R >= 2 required");
    if (T_ladder.empty()) throw std::invalid_argument("experiment: empty T ladder");
    for (std::size_t i = 1; i < T_ladder.size(); ++i)
        if (T_ladder[i] <= T_ladder[i - 1])
            throw std::invalid_argument("experiment: T ladder must be strictly increasing");
    for (const Eigen::VectorXd& a : alphas) {
        if (a.size() != model.dim + 1)
            throw std::invalid_argument("experiment: alpha must have d + 1 entries");
        if (!a.allFinite()) throw std::invalid_argument("experiment: alpha must be finite");
    }
    if (model.dim > 3) throw CapabilityError("census ceiling is d <= 3");
    if (check_euler && model.dim > 2)
        throw CapabilityError("euler verification runs at d <= 2");
}

namespace {

constexpr std::uint64_t kRealizationDomain = 0x7265616cULL;

// census of one replicate stream across the whole ladder; throws the
// degeneracy errors through to the caller
ExperimentResult::Replicate run_one(const ExperimentConfig& cfg, std::uint64_t stream) {
    ExperimentResult::Replicate rep;
    rep.stream = stream;
    std::uint64_t seed = split_seed(cfg.master_seed, kRealizationDomain + stream);
    FieldRealization field = synthesize(cfg.model, cfg.atoms, seed);
    for (double T : cfg.T_ladder) {
        Box box{T, cfg.model.dim};
        CensusResult census = run_census(field, box, cfg.levels, cfg.census);
        Eigen::VectorXi row(static_cast<int>(cfg.levels.size()) * (cfg.model.dim + 1));
        for (std::size_t li = 0; li < cfg.levels.size(); ++li)
            row.segment(static_cast<int>(li) * (cfg.model.dim + 1), cfg.model.dim + 1) =
                census.counts_by_level[li];
        rep.counts.push_back(row);
        rep.chi.push_back(census.chi);
        if (cfg.check_euler && census.chi != 1)
            throw CensusIntegrityError(census.chi, field.seed);
    }
    return rep;
}

} // namespace

ExperimentResult run_replications(const ExperimentConfig& config) {
    config.validate();
    const int R = config.replications;
    ExperimentResult result;
    result.config = config;
    result.replicates.resize(R);

    // Replicate r draws stream r; a replicate hitting a boundary/Hessian
    // degeneracy is re-drawn from replacement streams R, R+1, ... so that
    // retained replicates stay i.i.d. Census-integrity failures are real
    // failures and propagate.
    std::atomic<long> next_replacement{R};
    const long replacement_cap = R + std::max(1L, static_cast<long>(R) / 100);
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&](int r) {
        std::uint64_t stream = static_cast<std::uint64_t>(r);
        while (!failed.load()) {
            try {
                result.replicates[r] = run_one(config, stream);
                return;
            } catch (const BoundaryDegeneracyError&) {
                long s = next_replacement.fetch_add(1);
                if (s >= replacement_cap) {
                    std::scoped_lock lock(error_mutex);
                    if (!first_error)
                        first_error = std::make_exception_ptr(ExperimentIntegrityError(
                            "replacement-seed budget (1% of R) exceeded"));
                    failed.store(true);
                    return;
                }
                stream = static_cast<std::uint64_t>(s);
            } catch (const DegenerateHessianError&) {
                long s = next_replacement.fetch_add(1);
                if (s >= replacement_cap) {
                    std::scoped_lock lock(error_mutex);
                    if (!first_error)
                        first_error = std::make_exception_ptr(ExperimentIntegrityError(
                            "replacement-seed budget (1% of R) exceeded"));
                    failed.store(true);
                    return;
                }
                stream = static_cast<std::uint64_t>(s);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };

    int n_threads = std::max(1, config.threads);
    if (n_threads == 1) {
        for (int r = 0; r < R && !failed.load(); ++r) worker(r);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t)
            pool.emplace_back([&] {
                for (int r = next.fetch_add(1); r < R; r = next.fetch_add(1)) {
                    if (failed.load()) return;
                    worker(r);
                }
            });
        for (std::thread& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    result.replacements = static_cast<int>(next_replacement.load() - R);
    return result;
}

int ExperimentResult::level_index(const Level& u) const {
    for (std::size_t i = 0; i < config.levels.size(); ++i) {
        const Level& l = config.levels[i];
        if (l.neg_inf == u.neg_inf && (l.neg_inf || l.u == u.u)) return static_cast<int>(i);
    }
    throw std::invalid_argument("level not in experiment config");
}

int ExperimentResult::t_index(double T) const {
    for (std::size_t i = 0; i < config.T_ladder.size(); ++i)
        if (config.T_ladder[i] == T) return static_cast<int>(i);
    throw std::invalid_argument("T not in experiment ladder");
}

Eigen::MatrixXi ExperimentResult::counts_matrix(int t_index, int level_index) const {
    const int cols = config.model.dim + 1;
    Eigen::MatrixXi m(static_cast<int>(replicates.size()), cols);
    for (std::size_t r = 0; r < replicates.size(); ++r)
        m.row(static_cast<int>(r)) =
            replicates[r].counts[t_index].segment(level_index * cols, cols).transpose();
    return m;
}

std::vector<double> ExperimentResult::normalized_samples(int t_index, int level_index,
                                                         const Eigen::VectorXd& alpha) const {
    Eigen::MatrixXi counts = counts_matrix(t_index, level_index);
    const double T = config.T_ladder[t_index];
    const double divisor = std::sqrt(std::pow(2.0 * T, config.model.dim));
    std::vector<double> raw(counts.rows());
    for (int r = 0; r < counts.rows(); ++r)
        raw[r] = counts.row(r).cast<double>().dot(alpha);
    double mean = ordered_pairwise_sum(raw) / static_cast<double>(raw.size());
    for (double& x : raw) x = (x - mean) / divisor;
    return raw;
}

CltDiagnostics clt_diagnostics_of_samples(const std::vector<double>& samples) {
    CltDiagnostics diag;
    SampleMoments m = sample_moments(samples);
    diag.n = m.n;
    diag.mean = m.mean;
    diag.variance = m.variance;
    diag.skewness = m.skewness;
    diag.excess_kurtosis = m.excess_kurtosis;
    if (m.variance > 0) {
        std::vector<double> standardized(samples);
        double sd = std::sqrt(m.variance);
        for (double& x : standardized) x = (x - m.mean) / sd;
        diag.edf_distance = edf_distance(standardized);
    }
    return diag;
}

CltDiagnostics clt_diagnostics(const ExperimentResult& result, const Eigen::VectorXd& alpha,
                               double T, const Level& u) {
    if (alpha.isZero(0.0)) throw std::invalid_argument("clt_diagnostics: alpha = 0");
    if (result.replicates.size() < 200)
        throw std::invalid_argument("clt_diagnostics: R >= 200 required");
    std::vector<double> samples =
        result.normalized_samples(result.t_index(T), result.level_index(u), alpha);
    CltDiagnostics diag = clt_diagnostics_of_samples(samples);
    diag.zero_variance_anomaly = diag.variance == 0.0 && !u.neg_inf;
    return diag;
}

std::vector<VarianceScalingRow> variance_scaling(const ExperimentResult& result,
                                                 const Eigen::VectorXd& alpha, const Level& u) {
    if (result.config.T_ladder.size() < 1)
        throw std::invalid_argument("variance_scaling: empty ladder");
    std::vector<VarianceScalingRow> rows;
    int li = result.level_index(u);
    for (std::size_t ti = 0; ti < result.config.T_ladder.size(); ++ti) {
        std::vector<double> samples = result.normalized_samples(static_cast<int>(ti), li, alpha);
        SampleMoments m = sample_moments(samples);
        VarianceScalingRow row;
        row.T = result.config.T_ladder[ti];
        row.vhat = m.variance;
        row.stderr_ = variance_stderr(samples);
        rows.push_back(row);
    }
    return rows;
}

AsConvergence as_convergence(const ExperimentResult& result, int k, const Level& u,
                             const std::vector<MomentEstimate>& expected_by_T) {
    if (expected_by_T.size() != result.config.T_ladder.size())
        throw std::invalid_argument("as_convergence: one expected count per ladder rung");
    AsConvergence out;
    out.T = result.config.T_ladder;
    int li = result.level_index(u);
    for (std::size_t ti = 0; ti < out.T.size(); ++ti) {
        Eigen::MatrixXi counts = result.counts_matrix(static_cast<int>(ti), li);
        double mean = expected_by_T[ti].mean;
        bool ok = mean > 0 && mean > 10.0 * expected_by_T[ti].stderr_;
        out.applicable.push_back(ok);
        std::vector<double> ratios;
        if (ok) {
            for (int r = 0; r < counts.rows(); ++r)
                ratios.push_back(static_cast<double>(counts(r, k)) / mean);
        }
        std::vector<double> devs(ratios.size());
        for (std::size_t i = 0; i < ratios.size(); ++i) devs[i] = std::abs(ratios[i] - 1.0);
        std::sort(devs.begin(), devs.end());
        double median = devs.empty() ? std::numeric_limits<double>::quiet_NaN()
                        : devs.size() % 2 == 1
                            ? devs[devs.size() / 2]
                            : 0.5 * (devs[devs.size() / 2 - 1] + devs[devs.size() / 2]);
        out.ratios.push_back(std::move(ratios));
        out.median_abs_dev.push_back(median);
    }
    return out;
}

} // namespace critpt
