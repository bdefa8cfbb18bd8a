#pragma once

#include "usc/evolution.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace usc::cli {

inline constexpr int kCsvSchema = 1;

/// Everything a subcommand needs, resolved from defaults, an optional config file and overrides.
struct RunConfig {
    nlohmann::json doc;  ///< merged document; hashed and written to every manifest
    std::string hash;

    SimulationConfig sim;
    std::string name;
    int checkpoint_every = 1;
    std::vector<int> scan_n_qubits;
    std::vector<int> scan_m_e;
    std::string checkpoint;           ///< input checkpoint file (fit-env, observables, export-circuit)
    std::vector<std::string> runs;    ///< input run directories (env-scaling)
    int export_m_e = 1;
    int gauge_replicas = 10;
    std::string export_operator;     ///< x, y or z
    std::string output_root;
};

nlohmann::json default_document();

/// Merge `overlay` into `base`. Keys absent from `base` and type changes are config errors that
/// name the field path.
void merge_checked(nlohmann::json& base, const nlohmann::json& overlay, const std::string& path = "");

/// Apply "a.b.c=value"; the value is read as JSON when it parses, as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Convert and validate. Throws ConfigError with the offending field path.
RunConfig resolve(const nlohmann::json& doc, const std::string& output_root);

/// 64-bit FNV-1a of the compact dump without run.name, as 16 hex digits.
std::string config_hash(const nlohmann::json& doc);

}  // namespace usc::cli
