#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridco {

std::string_view library_version();

// First line of metrics.jsonl.
struct RunHeader {
    std::string version;
    std::uint64_t seed = 0;
    std::string mode;
    std::string config_json;  // canonical effective configuration
    std::vector<std::string> agents;      // strategic generator names
    std::vector<double> agent_costs;      // their marginal costs
    std::vector<std::string> candidates;  // candidate line names
    std::string design_mode;
    std::size_t horizon = 0;
    double w_anu = 0.0;
    // Two-stage runs: the stage-1 plan, $/yr.
    std::optional<double> planned_operational;
    std::optional<double> planned_expansion;
};

struct StepRecord {
    std::size_t episode = 0;
    std::size_t t = 0;
    std::vector<double> actions;  // per agent, after clamping
    std::vector<double> bids;     // per agent, applied $/MWh
    std::vector<double> rewards;  // per agent, $
    double operational_cost = 0.0;
    double shed = 0.0;  // MW
};

struct EpisodeRecord {
    std::size_t episode = 0;
    std::vector<double> design;  // applied design per candidate
    std::vector<double> raw;     // policy draw; equals design without a policy
    std::vector<double> mu;      // after this episode's update, if any
    std::optional<double> baseline;
    bool design_updated = false;
    double operational_cost = 0.0;  // sum_t C_oper, $ per episode
    double shed = 0.0;              // MWh
    double shed_cost = 0.0;         // $ per episode
    double expansion_cost = 0.0;    // $/yr
    double g_total = 0.0;
    std::vector<double> returns;    // discounted, per agent
    std::vector<double> profits;    // sum_t r_i(t), per agent
    std::vector<double> revenues;   // sum_t price * dispatch, per agent
    std::vector<double> mean_bids;  // per agent
    std::vector<double> mean_actions;         // taken, exploration included
    std::vector<double> mean_greedy_actions;  // actor output without noise
    double noise_sigma = 0.0;
    std::vector<double> critic_loss;  // mean over the episode's updates; empty before warm-up
};

class MetricsWriter {
public:
    MetricsWriter(const std::filesystem::path& path, bool log_steps);

    void header(const RunHeader& h);
    void step(const StepRecord& r);
    void episode(const EpisodeRecord& r);
    void flush();
    bool logs_steps() const { return log_steps_; }

private:
    void line(const std::string& text);

    std::ofstream out_;
    bool log_steps_;
};

struct MetricsLog {
    RunHeader header;
    std::vector<StepRecord> steps;
    std::vector<EpisodeRecord> episodes;
};

// Throws ParseError on malformed lines or a missing header. Step records
// are skipped unless `with_steps`.
MetricsLog read_metrics(const std::filesystem::path& path, bool with_steps = true);

}  // namespace gridco
