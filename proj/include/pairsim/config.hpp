#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "json.hpp"
#include "pairsim/analysis.hpp"
#include "pairsim/simulator.hpp"

namespace pairsim {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Contents of a configuration document.
struct RunConfig {
  ExperimentConfig experiment;
  AnalysisConfig analysis;
  Json metadata = Json::object();  // free-form, not consumed
};

/// Parses a configuration document. Every error is schema_violation and names
/// the offending key as a JSON pointer. Rates left out of "source" are derived
/// from power_mw, od and the scaling coefficients.
RunConfig parse_config(const Json& doc);
RunConfig load_config(const std::filesystem::path& path);

Json to_json(const ExperimentConfig& cfg);
Json to_json(const AnalysisConfig& cfg);
Json to_json(const RunConfig& cfg);
Json to_json(const MetricsReport& r);

/// SHA-256 of the canonical JSON form of the experiment, hex encoded.
std::string config_hash(const ExperimentConfig& cfg);

std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace pairsim
