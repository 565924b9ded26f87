#include "critpt/serialize.hpp"

#include "critpt/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace critpt {

nlohmann::json to_json(const SpectralModel& model) {
    nlohmann::json params = nlohmann::json::object();
    if (model.family == SpectralFamily::gaussian_anisotropic) {
        params["axis_scales"] = std::vector<double>(model.axis_scales.begin(),
                                                    model.axis_scales.end());
    } else if (model.family == SpectralFamily::bump_compact) {
        params["radius"] = model.radius;
        if (model.center != 0.0) params["center"] = model.center;
    }
    return {{"dim", model.dim},
            {"family", family_name(model.family)},
            {"params", params},
            {"total_mass", model.total_mass}};
}

SpectralModel model_from_json(const nlohmann::json& j) {
    SpectralModel m;
    m.dim = j.at("dim").get<int>();
    m.family = family_from_name(j.at("family").get<std::string>());
    m.total_mass = j.at("total_mass").get<double>();
    const nlohmann::json& params = j.at("params");
    if (m.family == SpectralFamily::gaussian_anisotropic) {
        std::vector<double> s = params.at("axis_scales").get<std::vector<double>>();
        m.axis_scales = Eigen::Map<Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
    } else if (m.family == SpectralFamily::bump_compact) {
        m.radius = params.at("radius").get<double>();
        m.center = params.value("center", 0.0);
    }
    return m;
}

nlohmann::json to_json(const MomentEstimate& e) {
    return {{"mean", e.mean},
            {"stderr", e.stderr_},
            {"n", e.n_samples},
            {"method", e.method == EstimateMethod::mc ? "mc" : "quadrature"}};
}

namespace {

nlohmann::json check_json(const AssumptionCheck& c) {
    return {{"pass", c.pass}, {"statistic", c.statistic}, {"detail", c.detail}};
}

} // namespace

nlohmann::json to_json(const AssumptionReport& rep) {
    return {{"A1", check_json(rep.a1)},
            {"A2", {{"pass", rep.a2_implied()}, {"detail", "implied by (A1), (A5), (A6)"}}},
            {"A3", check_json(rep.a3)},
            {"A4", check_json(rep.a4)},
            {"A5", check_json(rep.a5)},
            {"A6", check_json(rep.a6)},
            {"all_pass", rep.all_pass()}};
}

std::string level_to_string(const Level& u) {
    if (u.neg_inf) return "-inf";
    nlohmann::json j = u.u; // shortest round-trip formatting
    return j.dump();
}

Level level_from_string(const std::string& s) {
    if (s == "-inf") return Level::minus_inf();
    return Level::at(std::stod(s));
}

nlohmann::json to_json(const CensusResult& res) {
    nlohmann::json levels = nlohmann::json::array();
    nlohmann::json counts = nlohmann::json::array();
    for (std::size_t i = 0; i < res.levels.size(); ++i) {
        levels.push_back(level_to_string(res.levels[i]));
        counts.push_back(std::vector<int>(res.counts_by_level[i].begin(),
                                          res.counts_by_level[i].end()));
    }
    nlohmann::json mu = nlohmann::json::object();
    for (const auto& [mask, v] : res.boundary_mu) {
        std::string key = "{";
        for (int i = 0; i < res.dim; ++i)
            if (mask & (1 << i)) key += (key.size() > 1 ? "," : "") + std::to_string(i + 1);
        key += "}";
        mu[key] = std::vector<int>(v.begin(), v.end());
    }
    return {{"seed", res.seed},
            {"T", res.T},
            {"dim", res.dim},
            {"levels", levels},
            {"counts_by_level", counts},
            {"boundary_mu", mu},
            {"chi", res.chi},
            {"phi", res.phi_by_level},
            {"n_points", res.n_points},
            {"near_degenerate_warning", res.near_degenerate_warning}};
}

nlohmann::json to_json(const CltDiagnostics& diag) {
    return {{"n", diag.n},
            {"mean", diag.mean},
            {"variance", diag.variance},
            {"skewness", diag.skewness},
            {"excess_kurtosis", diag.excess_kurtosis},
            {"edf_distance", diag.edf_distance},
            {"zero_variance_anomaly", diag.zero_variance_anomaly}};
}

void dump_atoms_binary(const FieldRealization& field, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    static_assert(std::endian::native == std::endian::little,
                  "atom dump assumes a little-endian host");
    std::uint64_t m = static_cast<std::uint64_t>(field.M());
    out.write(reinterpret_cast<const char*>(&m), sizeof(m));
    const int d = field.dim();
    for (int j = 0; j < field.M(); ++j) {
        for (int l = 0; l < d; ++l) {
            double v = field.freqs(j, l);
            out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
        double xi = field.xi[j], eta = field.eta[j];
        out.write(reinterpret_cast<const char*>(&xi), sizeof(xi));
        out.write(reinterpret_cast<const char*>(&eta), sizeof(eta));
    }
}

FieldRealization load_atoms_binary(const SpectralModel& model, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::uint64_t m = 0;
    in.read(reinterpret_cast<char*>(&m), sizeof(m));
    FieldRealization f;
    f.model = model;
    f.amplitude = std::sqrt(model.total_mass / static_cast<double>(m));
    f.freqs.resize(static_cast<Eigen::Index>(m), model.dim);
    f.xi.resize(static_cast<Eigen::Index>(m));
    f.eta.resize(static_cast<Eigen::Index>(m));
    for (std::uint64_t j = 0; j < m; ++j) {
        for (int l = 0; l < model.dim; ++l) {
            double v;
            in.read(reinterpret_cast<char*>(&v), sizeof(v));
            f.freqs(static_cast<Eigen::Index>(j), l) = v;
        }
        double xi, eta;
        in.read(reinterpret_cast<char*>(&xi), sizeof(xi));
        in.read(reinterpret_cast<char*>(&eta), sizeof(eta));
        f.xi[static_cast<Eigen::Index>(j)] = xi;
        f.eta[static_cast<Eigen::Index>(j)] = eta;
    }
    if (!in) throw std::runtime_error("truncated atom dump: " + path);
    return f;
}

nlohmann::json atoms_to_json(const FieldRealization& field) {
    nlohmann::json atoms = nlohmann::json::array();
    for (int j = 0; j < field.M(); ++j) {
        nlohmann::json rec = nlohmann::json::array();
        for (int l = 0; l < field.dim(); ++l) rec.push_back(field.freqs(j, l));
        rec.push_back(field.xi[j]);
        rec.push_back(field.eta[j]);
        atoms.push_back(rec);
    }
    return {{"model", to_json(field.model)},
            {"seed", field.seed},
            {"M", field.M()},
            {"amplitude", field.amplitude},
            {"atoms", atoms}};
}

SpectralModel model_from_toml(const toml::Table& t) {
    SpectralModel m;
    m.dim = static_cast<int>(toml::get_integer(t, "model.dim"));
    m.family = family_from_name(toml::get_string(t, "model.family"));
    m.total_mass = toml::get_number_or(t, "model.total_mass", 1.0);
    if (m.family == SpectralFamily::gaussian_anisotropic) {
        std::vector<double> s = toml::get_number_array(t, "model.axis_scales");
        m.axis_scales = Eigen::Map<Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
    } else if (m.family == SpectralFamily::bump_compact) {
        m.radius = toml::get_number(t, "model.radius");
        m.center = toml::get_number_or(t, "model.center", 0.0);
    }
    return m;
}

ExperimentConfig experiment_from_toml(const toml::Table& t) {
    ExperimentConfig cfg;
    cfg.model = model_from_toml(t);
    for (const toml::Value& v : toml::get(t, "experiment.T_ladder").as_array())
        cfg.T_ladder.push_back(v.as_number());
    for (const toml::Value& v : toml::get(t, "experiment.levels").as_array()) {
        if (v.kind == toml::Value::Kind::string)
            cfg.levels.push_back(level_from_string(v.as_string()));
        else
            cfg.levels.push_back(Level::at(v.as_number()));
    }
    if (toml::has(t, "experiment.alphas")) {
        for (const toml::Value& row : toml::get(t, "experiment.alphas").as_array()) {
            const auto& arr = row.as_array();
            Eigen::VectorXd a(static_cast<Eigen::Index>(arr.size()));
            for (std::size_t i = 0; i < arr.size(); ++i) a[static_cast<Eigen::Index>(i)] =
                arr[i].as_number();
            cfg.alphas.push_back(a);
        }
    }
    cfg.replications = static_cast<int>(toml::get_integer(t, "experiment.replications"));
    cfg.atoms = static_cast<int>(toml::get_integer_or(t, "experiment.atoms", 4000));
    cfg.master_seed = static_cast<std::uint64_t>(toml::get_integer(t, "experiment.master_seed"));
    cfg.check_euler = toml::get_bool_or(t, "experiment.check_euler", cfg.model.dim <= 2);
    if (toml::has(t, "experiment.seeds_per_unit"))
        cfg.census.seeds_per_unit = toml::get_number(t, "experiment.seeds_per_unit");
    return cfg;
}

} // namespace critpt
