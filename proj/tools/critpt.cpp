// critpt: census and verification laboratory for critical points of
// stationary Gaussian random fields.
//
// Every subcommand is a pure function of (config file, flags, seed): the
// same invocation writes byte-identical outputs. Wall-clock timestamps go
// only to the sidecar run.log of `clt`.

#include "critpt/chaos.hpp"
#include "critpt/errors.hpp"
#include "critpt/harness.hpp"
#include "critpt/kac_rice.hpp"
#include "critpt/serialize.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace critpt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitAssumption = 2;
constexpr int kExitCensusIntegrity = 3;

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary); // fixed newlines on every host
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

void emit(bool want_json, const json& summary) {
    if (want_json) std::cout << summary.dump(2) << "\n";
}

std::vector<Level> parse_levels(const std::string& spec) {
    std::vector<Level> levels;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) levels.push_back(level_from_string(tok));
    return levels;
}

Eigen::VectorXd parse_alpha(const std::string& spec) {
    std::vector<double> vals;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

std::string csv_of_counts(const ExperimentResult& result, int t_index) {
    std::ostringstream out;
    const int d = result.config.model.dim;
    out << "replicate,stream";
    for (std::size_t li = 0; li < result.config.levels.size(); ++li)
        for (int k = 0; k <= d; ++k)
            out << ",crt_u" << result.config.levels[li].str() << "_k" << k;
    out << ",chi\n";
    for (std::size_t r = 0; r < result.replicates.size(); ++r) {
        const auto& rep = result.replicates[r];
        out << r << "," << rep.stream;
        for (int c = 0; c < rep.counts[t_index].size(); ++c)
            out << "," << rep.counts[t_index][c];
        out << "," << rep.chi[t_index] << "\n";
    }
    return out.str();
}

int run_check_model(const std::string& config, bool want_json) {
    SpectralModel model = model_from_toml(toml::parse_file(config));
    AssumptionReport rep = check_assumptions(model);
    json j = to_json(rep);
    j["model"] = to_json(model);
    std::cerr << "check-model " << family_name(model.family) << " d=" << model.dim << "\n";
    for (const auto& [name, check] :
         std::vector<std::pair<std::string, const AssumptionCheck*>>{
             {"A1", &rep.a1}, {"A3", &rep.a3}, {"A4", &rep.a4}, {"A5", &rep.a5}, {"A6", &rep.a6}})
        std::cerr << "  (" << name << ") " << (check->pass ? "pass" : "FAIL")
                  << "  statistic=" << check->statistic << "  " << check->detail << "\n";
    std::cerr << "  (A2) " << (rep.a2_implied() ? "pass" : "FAIL")
              << "  implied by (A1), (A5), (A6)\n";
    emit(want_json, j);
    return rep.all_pass() ? kExitOk : kExitAssumption;
}

int run_simulate(const std::string& config, std::uint64_t seed, int atoms,
                 const std::string& out, const std::string& format, bool want_json) {
    SpectralModel model = model_from_toml(toml::parse_file(config));
    FieldRealization field = synthesize(model, atoms, seed);
    if (!out.empty()) {
        if (format == "binary")
            dump_atoms_binary(field, out);
        else
            write_text(out, atoms_to_json(field).dump(2) + "\n");
    }
    emit(want_json, {{"op", "simulate"},
                     {"seed", seed},
                     {"M", field.M()},
                     {"amplitude", field.amplitude},
                     {"out", out}});
    return kExitOk;
}

int run_census_cmd(const std::string& config, std::uint64_t seed, int atoms, double T,
                   const std::string& levels_spec, double seeds_per_unit, const std::string& out,
                   bool want_json) {
    toml::Table t = toml::parse_file(config);
    SpectralModel model = model_from_toml(t);
    FieldRealization field = synthesize(model, atoms, seed);
    CensusOptions opts;
    opts.seeds_per_unit = seeds_per_unit;
    CensusResult res = run_census(field, Box{T, model.dim}, parse_levels(levels_spec), opts);
    json j = to_json(res);
    if (!out.empty()) write_text(out, j.dump(2) + "\n");
    std::cerr << "census seed=" << seed << " T=" << T << ": " << res.n_points
              << " critical points, chi=" << res.chi << "\n";
    emit(want_json, j);
    return res.chi == 1 ? kExitOk : kExitCensusIntegrity;
}

int run_kacrice(const std::string& config, std::uint64_t seed, const std::string& u_spec,
                int k, double T, long n_mc, bool second, double v, double b_len, int n_quad,
                long n_mc2, const std::string& out, bool want_json) {
    SpectralModel model = model_from_toml(toml::parse_file(config));
    json records = json::array();

    Level u = level_from_string(u_spec);
    std::optional<int> index = k >= 0 ? std::optional<int>(k) : std::nullopt;
    MomentEstimate first = expected_count(model, u, index, Box{T, model.dim}, n_mc, seed);
    json rec = to_json(first);
    rec["op"] = "expected_count";
    rec["params"] = {{"u", u.str()}, {"k", k}, {"T", T}};
    rec["model"] = to_json(model);
    records.push_back(rec);
    std::cerr << "kacrice expected_count = " << first.mean << " +- " << first.stderr_ << "\n";

    if (second) {
        Eigen::VectorXd vv = Eigen::VectorXd::Constant(model.dim, v);
        MomentEstimate e2 =
            second_factorial_moment(model, vv, Box{b_len / 2.0, model.dim}, n_mc2, n_quad, seed);
        json rec2 = to_json(e2);
        rec2["op"] = "second_factorial_moment";
        rec2["params"] = {{"v", v}, {"b_len", b_len}, {"n_quad", n_quad}};
        rec2["model"] = to_json(model);
        records.push_back(rec2);
        std::cerr << "kacrice second_factorial_moment = " << e2.mean << " +- " << e2.stderr_
                  << "\n";
    }
    if (!out.empty()) write_text(out, records.dump(2) + "\n");
    emit(want_json, records);
    return kExitOk;
}

int run_chaos(const std::string& config, std::uint64_t seed, const std::string& u_spec, int Q,
              long n_mc, const std::string& alpha_spec, int variance_q, int convolution_q,
              const std::string& out, bool want_json) {
    SpectralModel model = model_from_toml(toml::parse_file(config));
    ChaosExpansion ex = build_expansion(model, level_from_string(u_spec), Q, n_mc, seed);
    ex.alpha = alpha_spec.empty() ? Eigen::VectorXd::Ones(model.dim + 1) : parse_alpha(alpha_spec);

    if (!out.empty()) {
        // full D-component multi-index per row: a_k(n) = d(n_lower) /
        // det(Lambda1) * c(f~_k, n_upper); structural zeros (odd gradient
        // entries) carry stderr 0 and the flag
        std::ostringstream csv;
        csv << "k";
        for (int i = 0; i < ex.D; ++i) csv << ",n" << i;
        csv << ",estimate,stderr,flagged_zero\n";
        csv.precision(17);
        for (int k = 0; k <= ex.d; ++k) {
            const CoeffTable& table = ex.per_k[k];
            for (const Eigen::VectorXi& n : multi_indices_up_to(ex.D, Q)) {
                Eigen::VectorXi lower = n.head(ex.d);
                Eigen::VectorXi upper = n.tail(ex.D - ex.d);
                double weight = coeff_delta(lower) / ex.det_lambda1;
                int pos = table.position(upper);
                bool structural = weight == 0.0;
                csv << k;
                for (int i = 0; i < ex.D; ++i) csv << "," << n[i];
                csv << "," << weight * table.coeffs[pos].mean << ","
                    << std::abs(weight) * table.coeffs[pos].stderr_ << ","
                    << ((structural || table.flagged_zero[pos]) ? 1 : 0) << "\n";
            }
        }
        write_text(out, csv.str());
    }

    json summary = {{"op", "chaos"}, {"Q", Q}, {"u", u_spec}, {"n_mc", n_mc}};
    if (variance_q >= 0) {
        json vq = json::array();
        for (int q = 1; q <= variance_q; ++q)
            vq.push_back(chaotic_variance_term(model, ex, q));
        summary["V_q_mehler"] = vq;
    }
    if (convolution_q >= 0) {
        json vq = json::array();
        for (int q = 1; q <= convolution_q; ++q)
            vq.push_back(limit_variance_convolution(model, ex, q));
        summary["V_q_convolution"] = vq;
    }
    std::cerr << "chaos: coefficient tables through order " << Q << " written\n";
    emit(want_json, summary);
    return kExitOk;
}

int run_clt(const std::string& config, const std::string& out_dir, int threads, bool want_json) {
    toml::Table t = toml::parse_file(config);
    ExperimentConfig cfg = experiment_from_toml(t);
    cfg.threads = threads;

    auto t0 = std::chrono::steady_clock::now();
    ExperimentResult result = run_replications(cfg);
    auto t1 = std::chrono::steady_clock::now();

    fs::create_directories(out_dir);
    { // config copy
        std::ifstream in(config, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        write_text(out_dir + "/config.toml", ss.str());
    }
    for (std::size_t ti = 0; ti < cfg.T_ladder.size(); ++ti) {
        std::ostringstream name;
        name << out_dir << "/counts_T" << cfg.T_ladder[ti] << ".csv";
        write_text(name.str(), csv_of_counts(result, static_cast<int>(ti)));
    }

    json aggregate;
    aggregate["model"] = to_json(cfg.model);
    aggregate["replications"] = cfg.replications;
    aggregate["replacements"] = result.replacements;
    aggregate["T_ladder"] = cfg.T_ladder;
    json diagnostics = json::array();
    for (std::size_t ti = 0; ti < cfg.T_ladder.size(); ++ti) {
        for (std::size_t li = 0; li < cfg.levels.size(); ++li) {
            for (const Eigen::VectorXd& alpha : cfg.alphas) {
                std::vector<double> samples = result.normalized_samples(
                    static_cast<int>(ti), static_cast<int>(li), alpha);
                SampleMoments m = sample_moments(samples);
                json entry = {{"T", cfg.T_ladder[ti]},
                              {"u", cfg.levels[li].str()},
                              {"alpha", std::vector<double>(alpha.begin(), alpha.end())},
                              {"vhat", m.variance}};
                if (cfg.replications >= 200) {
                    CltDiagnostics diag =
                        clt_diagnostics(result, alpha, cfg.T_ladder[ti], cfg.levels[li]);
                    entry["diagnostics"] = to_json(diag);
                }
                diagnostics.push_back(entry);
            }
        }
    }
    write_text(out_dir + "/aggregate.json", aggregate.dump(2) + "\n");
    write_text(out_dir + "/diagnostics.json", diagnostics.dump(2) + "\n");
    { // timestamps confined to the sidecar log
        std::ostringstream log;
        log << "elapsed_seconds="
            << std::chrono::duration<double>(t1 - t0).count() << "\n";
        write_text(out_dir + "/run.log", log.str());
    }
    std::cerr << "clt: " << cfg.replications << " replications over " << cfg.T_ladder.size()
              << " box sizes -> " << out_dir << "\n";
    emit(want_json, {{"op", "clt"}, {"out", out_dir}, {"replacements", result.replacements}});
    return kExitOk;
}

int run_euler_audit(const std::string& config, int n_seeds, double T, int atoms, int threads,
                    bool want_json) {
    toml::Table t = toml::parse_file(config);
    SpectralModel model = model_from_toml(t);
    ExperimentConfig cfg;
    cfg.model = model;
    cfg.T_ladder = {T};
    cfg.levels = {Level::minus_inf()};
    cfg.replications = n_seeds;
    cfg.atoms = atoms;
    cfg.master_seed = static_cast<std::uint64_t>(toml::get_integer_or(t, "experiment.master_seed", 1));
    cfg.threads = threads;
    if (toml::has(t, "experiment.seeds_per_unit"))
        cfg.census.seeds_per_unit = toml::get_number(t, "experiment.seeds_per_unit");

    ExperimentResult result = run_replications(cfg); // throws on chi != 1
    int ok = 0;
    for (const auto& rep : result.replicates)
        if (rep.chi[0] == 1) ++ok;
    std::cerr << "euler-audit: " << ok << "/" << n_seeds << " seeds with chi = 1 (T=" << T
              << ", " << result.replacements << " degeneracy re-draws)\n";
    emit(want_json, {{"op", "euler-audit"},
                     {"T", T},
                     {"seeds", n_seeds},
                     {"chi_equals_one", ok},
                     {"replacements", result.replacements}});
    return ok == n_seeds ? kExitOk : kExitCensusIntegrity;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"critical points of stationary Gaussian random fields"};
    app.require_subcommand(1);
    app.fallthrough(); // parent flags (--json) usable after the subcommand

    std::string config, out, format = "binary", levels = "-inf", u_spec = "-inf";
    std::string alpha_spec;
    std::uint64_t seed = 1;
    int atoms = 4000, k = -1, n_quad = 48, Q = 4, n_seeds = 20, threads = 1;
    double T = 5.0, v = 0.0, b_len = 0.5, seeds_per_unit = 0.0;
    long n_mc = 200000, n_mc2 = 20000, n_mc_chaos = 1000000;
    int variance_q = -1, convolution_q = -1;
    bool second = false, want_json = false;

    app.add_flag("--json", want_json, "print a JSON summary on stdout");

    CLI::App* sc_check = app.add_subcommand("check-model", "verify assumptions (A1)-(A6)");
    sc_check->add_option("--config", config)->required();

    CLI::App* sc_sim = app.add_subcommand("simulate", "synthesize a realization and dump atoms");
    sc_sim->add_option("--config", config)->required();
    sc_sim->add_option("--seed", seed);
    sc_sim->add_option("--atoms", atoms);
    sc_sim->add_option("--out", out);
    sc_sim->add_option("--format", format)->check(CLI::IsMember({"binary", "json"}));

    CLI::App* sc_census = app.add_subcommand("census", "critical-point census of one realization");
    sc_census->add_option("--config", config)->required();
    sc_census->add_option("--seed", seed);
    sc_census->add_option("--atoms", atoms);
    sc_census->add_option("--T", T);
    sc_census->add_option("--levels", levels, "comma list, -inf allowed");
    sc_census->add_option("--seeds-per-unit", seeds_per_unit);
    sc_census->add_option("--out", out);

    CLI::App* sc_kr = app.add_subcommand("kacrice", "theoretical moments");
    sc_kr->add_option("--config", config)->required();
    sc_kr->add_option("--seed", seed);
    sc_kr->add_option("--u", u_spec);
    sc_kr->add_option("--k", k, "index; -1 sums all indexes");
    sc_kr->add_option("--T", T);
    sc_kr->add_option("--n-mc", n_mc);
    sc_kr->add_flag("--second-moment", second);
    sc_kr->add_option("--v", v, "gradient level for the second moment");
    sc_kr->add_option("--b-len", b_len);
    sc_kr->add_option("--n-quad", n_quad);
    sc_kr->add_option("--n-mc-lag", n_mc2);
    sc_kr->add_option("--out", out);

    CLI::App* sc_chaos = app.add_subcommand("chaos", "Hermite coefficient tables and variances");
    sc_chaos->add_option("--config", config)->required();
    sc_chaos->add_option("--seed", seed);
    sc_chaos->add_option("--u", u_spec);
    sc_chaos->add_option("--Q", Q);
    sc_chaos->add_option("--n-mc", n_mc_chaos);
    sc_chaos->add_option("--alpha", alpha_spec, "comma list of d+1 weights");
    sc_chaos->add_option("--variance-q", variance_q, "V_q by the Mehler lag integral, q = 1..N");
    sc_chaos->add_option("--convolution-q", convolution_q, "V_q by the spectral convolution");
    sc_chaos->add_option("--out", out, "coefficient CSV path");

    CLI::App* sc_clt = app.add_subcommand("clt", "replicated experiment with CLT diagnostics");
    sc_clt->add_option("--config", config)->required();
    sc_clt->add_option("--out", out)->required();
    sc_clt->add_option("--threads", threads);

    CLI::App* sc_euler = app.add_subcommand("euler-audit", "chi = 1 on every seed");
    sc_euler->add_option("--config", config)->required();
    sc_euler->add_option("--seeds", n_seeds);
    sc_euler->add_option("--T", T);
    sc_euler->add_option("--atoms", atoms);
    sc_euler->add_option("--threads", threads);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sc_check->parsed()) return run_check_model(config, want_json);
        if (sc_sim->parsed()) return run_simulate(config, seed, atoms, out, format, want_json);
        if (sc_census->parsed())
            return run_census_cmd(config, seed, atoms, T, levels, seeds_per_unit, out, want_json);
        if (sc_kr->parsed())
            return run_kacrice(config, seed, u_spec, k, T, n_mc, second, v, b_len, n_quad, n_mc2,
                               out, want_json);
        if (sc_chaos->parsed())
            return run_chaos(config, seed, u_spec, Q, n_mc_chaos, alpha_spec, variance_q,
                             convolution_q, out, want_json);
        if (sc_clt->parsed()) return run_clt(config, out, threads, want_json);
        if (sc_euler->parsed())
            return run_euler_audit(config, n_seeds, T, atoms, threads, want_json);
    } catch (const CensusIntegrityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCensusIntegrity;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
