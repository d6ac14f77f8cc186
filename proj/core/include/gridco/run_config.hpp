#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "gridco/grid_model.hpp"
#include "gridco/maddpg.hpp"

namespace gridco {

enum class RunMode { co_opt_continuous, co_opt_discrete, two_stage, clear_only };

std::string_view to_string(RunMode mode);

struct MarketConfig {
    std::optional<double> shed_penalty = 10000.0;  // null in the file disables shedding
    double fixed_increment = 50.0;
    double design_reference = 100.0;
    double bid_step_ratio = 0.1;
    double bid_spread = 1.5;
};

struct DesignConfig {
    std::vector<std::string> candidates;  // empty: every candidate line of the case
    std::vector<double> sigma{5.0};       // MW; one value is broadcast
    std::vector<double> mu_init;          // empty: 0 MW or 0.5
    std::size_t n_up = 10;
    std::optional<double> lr;  // default 0.02 continuous, 0.01 discrete
    double baseline_decay = 0.95;
    bool normalize_advantages = true;
    double mu_floor = 0.01;
};

// Two-stage only. Bids keyed by generator name; every strategic generator
// needs one, the others bid their marginal cost.
struct ScenarioConfig {
    std::map<std::string, double> bids;
    double shed_penalty = 1e5;  // stage-1 subproblems
};

struct OutputConfig {
    bool log_steps = true;
    std::size_t checkpoint_every = 500;
    double summary_fraction = 0.1;
    std::size_t progress_every = 100;
};

struct RunConfig {
    std::filesystem::path case_path;
    RunMode mode = RunMode::co_opt_continuous;
    std::size_t episodes = 0;
    std::optional<std::size_t> horizon;   // truncates the case profile
    std::optional<double> annualization;  // default 8760 / T
    std::uint64_t seed = 0;
    std::filesystem::path output_dir;
    MaddpgConfig maddpg;  // gamma lives here; the file sets it at top level
    MarketConfig market;
    DesignConfig design;
    std::optional<ScenarioConfig> scenario;
    OutputConfig output;
};

// Parses a run configuration. Relative case paths resolve against
// `base_dir`. Each override is "dotted.key=value" with a YAML value and is
// applied before schema checking, so overrides obey the same rules as the
// file. Throws ConfigError.
RunConfig parse_run_config(std::string_view text, const std::vector<std::string>& overrides = {},
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

// Canonical JSON text of the effective configuration (stable key order).
// The output directory is left out: it does not affect results.
std::string run_config_json(const RunConfig& cfg);

// Case with the configured candidate subset and horizon applied.
NetworkCase load_run_case(const RunConfig& cfg);

double run_annualization(const RunConfig& cfg, const NetworkCase& net);

DesignMode design_mode(RunMode mode);

// Independent generator per stream name, derived from the run seed with
// splitmix64.
std::mt19937_64 rng_stream(std::uint64_t seed, std::string_view name);

}  // namespace gridco
