#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace qcl::cli {

inline constexpr const char* config_schema = "qcl-config/1";
inline constexpr const char* run_schema = "qcl-run/1";

/// Subcommands that produce an artifact directory.
const std::vector<std::string>& run_commands();

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Diagnostic {
    std::string severity;  ///< "error" or "warning"
    std::string message;
};

nlohmann::json to_json(const std::vector<Diagnostic>& diagnostics);

/// Parsed experiment configuration. Keys not listed here keep their defaults.
///
///   schema        "qcl-config/1" (required)
///   command       forward | dtn | linearize | reconstruct | runge | cgo-probe
///   grid          nodes per axis minus one (default 32)
///   seed          integer (default 0)
///   model         built-in name, or {"manifest": path relative to the config}
///   lambda        number or [re, im]
///   boundary      {"kind": "fourier", "mode": k, "amplitude": A} or
///                 {"kind": "linear", "gradient": [gx, gy], "amplitude": A}
///   test_boundary same forms as boundary
///   m, orders     linearization order / list of orders for reconstruct
///   stencil       {"t": ..., "levels": ...}
///   solver        {"tolerance", "max_iterations", "delta"}
///   plan          {"directions", "h": [...]} or {"directions", "n_h", "h_min", "h_max"},
///                 optional "random": true for seeded random directions
///   reg_weight, lambdas, fit_degree
///   runge         {"sources", "p": [...]}
///   cgo           {"a", "c", "h": [...], "distances": [...], "remainder_grid"}
struct ExperimentConfig {
    std::string command;
    nlohmann::json raw;
    std::filesystem::path base_dir;
    int grid = 32;
    std::uint64_t seed = 0;
};

/// Schema and range checks without running solves. Never throws; problems become diagnostics.
std::vector<Diagnostic> validate(const nlohmann::json& raw, const std::filesystem::path& base_dir,
                                 const std::string& command = "");

/// Reads and checks a config file. Throws ConfigError naming every error diagnostic.
ExperimentConfig load_config(const std::filesystem::path& path, const std::string& command,
                             std::optional<int> grid_override = std::nullopt,
                             std::optional<std::uint64_t> seed_override = std::nullopt);

struct RunOutcome {
    int exit_code = 0;
    nlohmann::json report;  ///< manifest summary on success, error object on failure
};

/// Runs one command into out_dir. Artifacts are staged next to out_dir and moved into
/// place only on success; a failing run leaves no directory behind.
RunOutcome run(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Exit codes.
inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 2;
inline constexpr int exit_stage = 3;
inline constexpr int exit_io = 4;

/// Error object {"status": "error", "stage", "kind", "message"}.
nlohmann::json error_json(const std::string& stage, const std::string& kind, const std::string& message);

}  // namespace qcl::cli
