#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "gridco/grid_model.hpp"
#include "gridco/lp.hpp"

namespace gridco {

struct ClearingInput {
    std::vector<double> bids;        // $/MWh, per generator
    std::vector<double> demands;     // MW, per bus
    std::vector<double> capacities;  // MW, per line (effective)
    // Value of lost load in $/MWh; nullopt disables load shedding.
    std::optional<double> shed_penalty;
};

// Truthful bids, step-t demand and base capacities.
ClearingInput truthful_input(const NetworkCase& net, std::size_t t, std::optional<double> shed_penalty = {});

struct ClearingResult {
    std::vector<double> dispatch;   // MW, per generator
    std::vector<double> angles;     // rad, per bus (slack = 0)
    std::vector<double> flows;      // MW, per line, positive from -> to
    std::vector<double> lmp;        // $/MWh, per bus
    std::vector<double> gen_price;  // $/MWh, LMP at each generator's bus
    std::vector<double> shed;       // MW, per bus
    double operational_cost = 0.0;  // sum gen_price * dispatch, $ per step
    double shed_cost = 0.0;         // shed_penalty * total shed, $ per step
    double objective = 0.0;         // bid-weighted clearing objective
};

// Column layout of the clearing LP.
struct ClearingLayout {
    std::size_t num_generators = 0;
    std::size_t num_angles = 0;  // every bus except the slack
    std::size_t num_shed = 0;    // 0 when shedding is disabled
    BusId slack = 0;

    std::size_t gen_col(std::size_t g) const { return g; }
    // Column of bus n's angle; n must not be the slack.
    std::size_t angle_col(BusId n) const { return num_generators + (n < slack ? n : n - 1); }
    std::size_t shed_col(BusId n) const { return num_generators + num_angles + n; }
    std::size_t num_vars() const { return num_generators + num_angles + num_shed; }
};

// Variables: dispatch, non-slack angles, optional shed. One balance row
// per bus, two flow-limit rows per line (+ then -).
LinearProgram build_lp(const NetworkCase& net, const ClearingInput& input, ClearingLayout* layout = nullptr);

// Solves the clearing LP. LMPs are the duals of the bus balance rows.
// Throws InfeasibleError when no dispatch meets demand (shedding disabled)
// and SolverError on any other solver failure.
ClearingResult clear_market(const NetworkCase& net, const ClearingInput& input, const SolverOptions& opts = {});

double operational_cost(const ClearingResult& result);

}  // namespace gridco
