#include "gridco/market_env.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

#include "gridco/error.hpp"

namespace gridco {

double bid_price(double action, double marginal_cost, double alpha) {
    if (!(action >= 0.0 && action <= 1.0))
        throw ValidationError("bid action must lie in [0, 1], got " + std::to_string(action));
    return marginal_cost * (alpha * action + 1.0);
}

double constrain_bid(double proposed, BidConstraintState& s, const BidLimits& limits) {
    const double lo = std::max((1.0 - limits.step_ratio) * s.prev_bid, s.episode_max / limits.spread);
    const double hi = std::min((1.0 + limits.step_ratio) * s.prev_bid, limits.spread * s.episode_min);
    // prev_bid is always inside [lo, hi]; a small slack absorbs rounding.
    assert(lo <= hi * (1.0 + 1e-12));
    const double bid = std::clamp(proposed, std::min(lo, hi), hi);
    s.prev_bid = bid;
    s.episode_min = std::min(s.episode_min, bid);
    s.episode_max = std::max(s.episode_max, bid);
    return bid;
}

MarketEnv::MarketEnv(NetworkCase net, EnvOptions opts)
    : net_(std::move(net)), opts_(std::move(opts)),
      agents_(net_.strategic_generators()), candidates_(net_.candidate_lines()) {
    if (net_.profile.horizon() == 0) throw ValidationError("market environment: empty demand profile");
    peak_load_ = std::max(net_.peak_total_demand(), 1e-12);
    capacities_.resize(net_.num_lines());
    for (std::size_t l = 0; l < net_.num_lines(); ++l) capacities_[l] = net_.lines[l].base_capacity;
}

Observation MarketEnv::observe(std::size_t agent, std::size_t t) const {
    const auto& gen = net_.generators[agents_[agent]];
    Observation o;
    o.total_load = net_.total_demand_at(t);
    o.own_prev_bid = bid_state_[agent].prev_bid;
    o.design = design_increments_;
    o.features.resize(static_cast<Eigen::Index>(obs_dim()));
    o.features[0] = o.total_load / peak_load_;
    o.features[1] = o.own_prev_bid / (gen.marginal_cost * (1.0 + gen.alpha));
    for (std::size_t k = 0; k < design_increments_.size(); ++k)
        o.features[static_cast<Eigen::Index>(2 + k)] = design_increments_[k] / opts_.design_reference;
    return o;
}

std::vector<Observation> MarketEnv::reset(const std::vector<double>& design,
                                          const std::optional<std::vector<double>>& initial_bids) {
    if (design.size() != candidates_.size())
        throw DimensionError("design has " + std::to_string(design.size()) + " entries, expected " +
                             std::to_string(candidates_.size()) + " candidate lines");
    if (initial_bids && initial_bids->size() != agents_.size())
        throw DimensionError("initial bids: expected one per strategic generator");
    design_increments_.resize(design.size());
    for (std::size_t k = 0; k < design.size(); ++k)
        design_increments_[k] = installed_increment(design[k], opts_.mode, opts_.fixed_increment);
    capacities_ = effective_capacities(net_, candidates_, design, opts_.mode, opts_.fixed_increment);

    bid_state_.clear();
    for (std::size_t a = 0; a < agents_.size(); ++a) {
        const double b0 = initial_bids ? (*initial_bids)[a] : net_.generators[agents_[a]].marginal_cost;
        if (!(b0 > 0.0)) throw ValidationError("initial bids must be positive");
        bid_state_.push_back(BidConstraintState::start(b0));
    }
    t_ = 0;
    done_ = false;
    std::vector<Observation> obs;
    for (std::size_t a = 0; a < agents_.size(); ++a) obs.push_back(observe(a, 0));
    return obs;
}

StepOutcome MarketEnv::step(const std::vector<double>& actions) {
    if (done_) throw Error("market environment: step called after the episode ended");
    if (actions.size() != agents_.size())
        throw DimensionError("expected " + std::to_string(agents_.size()) + " actions, got " +
                             std::to_string(actions.size()));
    StepOutcome out;
    out.t = t_;

    ClearingInput in;
    in.bids.resize(net_.num_generators());
    for (std::size_t g = 0; g < net_.num_generators(); ++g) in.bids[g] = net_.generators[g].marginal_cost;
    for (std::size_t a = 0; a < agents_.size(); ++a) {
        double act = actions[a];
        if (!(act >= 0.0 && act <= 1.0)) {
            if (opts_.strict_actions || std::isnan(act)) bid_price(act, 1.0, 1.0);  // throws
            act = std::clamp(act, 0.0, 1.0);
            ++out.clamped_actions;
        }
        const auto& gen = net_.generators[agents_[a]];
        in.bids[agents_[a]] = constrain_bid(bid_price(act, gen.marginal_cost, gen.alpha), bid_state_[a], opts_.limits);
    }
    in.demands = net_.demands_at(t_);
    in.capacities = capacities_;
    in.shed_penalty = opts_.shed_penalty;
    out.applied_bids = in.bids;

    out.rewards.assign(agents_.size(), 0.0);
    try {
        out.clearing = clear_market(net_, in, opts_.solver);
    } catch (const InfeasibleError&) {
        out.infeasible = true;
        out.done = done_ = true;
        ++t_;
        for (std::size_t a = 0; a < agents_.size(); ++a) out.observations.push_back(observe(a, t_ - 1));
        return out;
    }
    for (std::size_t a = 0; a < agents_.size(); ++a) {
        const auto g = agents_[a];
        out.rewards[a] = (out.clearing.gen_price[g] - net_.generators[g].marginal_cost) * out.clearing.dispatch[g];
    }
    ++t_;
    out.done = done_ = (t_ >= horizon());
    // Terminal observations repeat the last step's load.
    const std::size_t next_t = std::min(t_, horizon() - 1);
    for (std::size_t a = 0; a < agents_.size(); ++a) out.observations.push_back(observe(a, next_t));
    return out;
}

double episode_return(const std::vector<double>& rewards, double gamma) {
    double g = 0.0, w = 1.0;
    for (double r : rewards) {
        g += w * r;
        w *= gamma;
    }
    return g;
}

double total_return(const std::vector<double>& step_costs, double w_anu, double expansion_cost) {
    double s = 0.0;
    for (double c : step_costs) s += c;
    return -(w_anu * s + expansion_cost);
}

double annualization_factor(std::size_t horizon) {
    if (horizon == 0) throw ValidationError("annualization factor needs a positive horizon");
    return 8760.0 / static_cast<double>(horizon);
}

}  // namespace gridco
