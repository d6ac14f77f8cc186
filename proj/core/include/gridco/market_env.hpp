#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "gridco/dcopf.hpp"
#include "gridco/grid_model.hpp"

namespace gridco {

// lambda_bid = cost * (alpha * a + 1). Throws ValidationError when the
// action lies outside [0, 1].
double bid_price(double action, double marginal_cost, double alpha);

struct BidConstraintState {
    double prev_bid = 0.0;
    double episode_min = 0.0;
    double episode_max = 0.0;

    static BidConstraintState start(double initial_bid) { return {initial_bid, initial_bid, initial_bid}; }
};

struct BidLimits {
    double step_ratio = 0.1;  // consecutive bids within [1 - r, 1 + r] of the previous one
    double spread = 1.5;      // episode max / min
};

// Projects `proposed` onto the feasible interval and records the applied bid.
double constrain_bid(double proposed, BidConstraintState& state, const BidLimits& limits = {});

struct Observation {
    double total_load = 0.0;    // MW
    double own_prev_bid = 0.0;  // $/MWh
    std::vector<double> design; // installed increment per candidate line, MW
    // [load / peak load, prev bid / (cost * (1 + alpha)), design / reference]
    Eigen::VectorXd features;
};

struct StepOutcome {
    std::size_t t = 0;
    std::vector<Observation> observations;  // next observations, one per agent
    std::vector<double> rewards;            // $, one per agent
    std::vector<double> applied_bids;       // $/MWh, one per generator
    ClearingResult clearing;
    bool done = false;
    bool infeasible = false;  // clearing failed; episode ended early
    std::size_t clamped_actions = 0;
};

struct EnvOptions {
    DesignMode mode = DesignMode::continuous;
    double fixed_increment = 50.0;  // MW, discrete mode
    std::optional<double> shed_penalty = 10000.0;
    double design_reference = 100.0;  // MW
    BidLimits limits;
    // Out-of-range actions: error when strict, clamp (and count) otherwise.
    bool strict_actions = false;
    SolverOptions solver;
};

class MarketEnv {
public:
    MarketEnv(NetworkCase net, EnvOptions opts = {});

    // Starts an episode under `design` (indexed like the candidate lines).
    // Initial bids default to the agents' marginal costs.
    std::vector<Observation> reset(const std::vector<double>& design,
                                   const std::optional<std::vector<double>>& initial_bids = std::nullopt);

    // One clearing with one action per strategic agent.
    StepOutcome step(const std::vector<double>& actions);

    const NetworkCase& network() const { return net_; }
    const EnvOptions& options() const { return opts_; }
    const std::vector<std::size_t>& agents() const { return agents_; }
    const std::vector<std::size_t>& candidates() const { return candidates_; }
    const std::vector<double>& capacities() const { return capacities_; }
    std::size_t num_agents() const { return agents_.size(); }
    std::size_t obs_dim() const { return 2 + candidates_.size(); }
    std::size_t horizon() const { return net_.profile.horizon(); }
    std::size_t time() const { return t_; }
    bool done() const { return done_; }

private:
    Observation observe(std::size_t agent, std::size_t t) const;

    NetworkCase net_;
    EnvOptions opts_;
    std::vector<std::size_t> agents_;
    std::vector<std::size_t> candidates_;
    double peak_load_ = 1.0;

    std::vector<double> design_increments_;
    std::vector<double> capacities_;
    std::vector<BidConstraintState> bid_state_;
    std::size_t t_ = 0;
    bool done_ = true;
};

// sum_t gamma^t r(t), t from 0.
double episode_return(const std::vector<double>& rewards, double gamma);

// -(w_anu * sum_t C_oper(t) + C_exp).
double total_return(const std::vector<double>& step_costs, double w_anu, double expansion_cost);

// Hours per year over simulated hours.
double annualization_factor(std::size_t horizon);

}  // namespace gridco
