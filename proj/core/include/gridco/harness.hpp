#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gridco/metrics.hpp"
#include "gridco/run_config.hpp"
#include "gridco/stage1.hpp"

namespace gridco {

struct PlannedCosts {
    double operational = 0.0;  // $/yr, bid-weighted
    double expansion = 0.0;
    double total = 0.0;
};

// Averages over the last `window` episodes of a run. Costs are $/yr.
struct Summary {
    std::string run_id;
    std::string mode;
    std::size_t window = 0;
    std::vector<std::string> agents;
    std::vector<double> mean_bids;  // $/MWh
    std::vector<double> profits;    // w_anu * sum_t r_i(t)
    std::vector<double> revenues;   // w_anu * sum_t price_i * P_i(t)
    double operational_cost = 0.0;  // w_anu * sum_t C_oper(t)
    double expansion_cost = 0.0;
    double total_cost = 0.0;        // operational + expansion
    double shed = 0.0;              // MWh per episode
    bool converged = false;         // no shedding anywhere in the window
    std::optional<PlannedCosts> planned;
};

// max(1, ceil(fraction * episodes)).
std::size_t summary_window(std::size_t episodes, double fraction);

// Throws ValidationError when `window` is zero or exceeds the logged episodes.
Summary summarize(const MetricsLog& log, std::size_t window, std::string run_id = {});

std::string summary_csv(const std::vector<Summary>& rows);
void write_summary_csv(const std::filesystem::path& path, const std::vector<Summary>& rows);

struct RunArtifacts {
    std::filesystem::path dir;
    std::filesystem::path metrics;
    std::filesystem::path summary_csv;
    std::filesystem::path design;
    std::vector<std::filesystem::path> checkpoints;
    std::vector<double> final_design;  // per candidate line
    Summary summary;
    std::optional<Stage1Result> stage1;
};

using ProgressFn = std::function<void(const EpisodeRecord&)>;

// Per episode: sample a design, play one market episode with
// MADDPG bidding, train, then feed G_total to the design policy.
RunArtifacts run_co_optimization(const RunConfig& cfg, const ProgressFn& progress = {});

// Stage-1 expansion LP under the scenario bids, then MADDPG training on the
// expanded network with the design held fixed.
RunArtifacts run_two_stage(const RunConfig& cfg, const ProgressFn& progress = {});

// MADDPG training with a fixed continuous design (MW per candidate line).
RunArtifacts run_fixed_design(const RunConfig& cfg, const std::vector<double>& design,
                              const ProgressFn& progress = {});

// Dispatches on cfg.mode; clear-only configs are rejected.
RunArtifacts run(const RunConfig& cfg, const ProgressFn& progress = {});

// Scenario bids per generator; non-strategic units bid their cost.
std::vector<double> scenario_bids(const RunConfig& cfg, const NetworkCase& net);

}  // namespace gridco
