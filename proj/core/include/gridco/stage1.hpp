#pragma once

#include <cstddef>
#include <vector>

#include "gridco/grid_model.hpp"
#include "gridco/lp.hpp"

namespace gridco {

struct Stage1Options {
    // Shed price inside the snapshot subproblems. It must exceed every
    // nodal price reachable without shedding so that shedding is only
    // chosen when no expansion can avoid it.
    double shed_penalty = 1e5;
    double relative_gap = 1e-9;
    std::size_t max_iterations = 500;
    SolverOptions solver;
};

struct Stage1Result {
    std::vector<double> expansion;     // MW per candidate line
    double planned_operational = 0.0;  // w_anu * sum_t sum_i bid_i P_i(t), $/yr
    double expansion_cost = 0.0;       // $/yr
    double objective = 0.0;            // planned_operational + expansion_cost
    std::size_t iterations = 0;
    double lower_bound = 0.0;
};

// Least-cost continuous expansion of the candidate lines under fixed bids
// over every step of the demand profile (Benders decomposition with one
// cut per step). Throws InfeasibleError when demand cannot be served even
// with expansion.
Stage1Result stage1_expansion_lp(const NetworkCase& net, const std::vector<double>& fixed_bids, double w_anu,
                                 const Stage1Options& opts = {});

// The same problem as one joint LP. Only practical for small cases.
Stage1Result stage1_expansion_direct(const NetworkCase& net, const std::vector<double>& fixed_bids, double w_anu,
                                     const SolverOptions& solver = {});

}  // namespace gridco
