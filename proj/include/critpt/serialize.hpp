#pragma once

#include "critpt/census.hpp"
#include "critpt/harness.hpp"
#include "critpt/toml_lite.hpp"

#include <json.hpp>

#include <string>

namespace critpt {

// model <-> JSON {dim, family, params, total_mass}; doubles round-trip
// bit-exactly through the shortest-representation writer
nlohmann::json to_json(const SpectralModel& model);
SpectralModel model_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MomentEstimate& e);
nlohmann::json to_json(const AssumptionReport& rep);
nlohmann::json to_json(const CensusResult& res);
nlohmann::json to_json(const CltDiagnostics& diag);

Level level_from_string(const std::string& s);
std::string level_to_string(const Level& u);

// atom dump: u64 count, then M records of (d + 2) little-endian doubles
void dump_atoms_binary(const FieldRealization& field, const std::string& path);
FieldRealization load_atoms_binary(const SpectralModel& model, const std::string& path);
nlohmann::json atoms_to_json(const FieldRealization& field);

// config loading from the TOML subset
SpectralModel model_from_toml(const toml::Table& t);
ExperimentConfig experiment_from_toml(const toml::Table& t);

} // namespace critpt
