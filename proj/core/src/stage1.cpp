#include "gridco/stage1.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gridco/dcopf.hpp"
#include "gridco/error.hpp"

namespace gridco {

namespace {

void check_bids(const NetworkCase& net, const std::vector<double>& bids, double w_anu) {
    if (bids.size() != net.num_generators())
        throw DimensionError("stage 1: expected " + std::to_string(net.num_generators()) + " bids, got " +
                             std::to_string(bids.size()));
    for (double b : bids)
        if (!(b > 0.0) || !std::isfinite(b)) throw ValidationError("stage 1: fixed bids must be positive");
    if (!(w_anu > 0.0)) throw ValidationError("stage 1: annualization factor must be positive");
}

struct Snapshot {
    double cost = 0.0;   // bid cost plus shed penalty, $ per step
    double bid_cost = 0.0;
    double shed = 0.0;   // MW
    std::vector<double> capacity_slope;  // d cost / d capacity, per candidate
};

Snapshot solve_snapshot(const NetworkCase& net, const std::vector<double>& bids, std::size_t t,
                        const std::vector<double>& capacities, const std::vector<std::size_t>& candidates,
                        const Stage1Options& opts) {
    ClearingInput in;
    in.bids = bids;
    in.demands = net.demands_at(t);
    in.capacities = capacities;
    in.shed_penalty = opts.shed_penalty;
    ClearingLayout lay;
    const auto lp = build_lp(net, in, &lay);
    const auto sol = solve(lp, opts.solver);
    if (!sol.optimal())
        throw SolverError("stage 1: snapshot " + std::to_string(t) + " solve failed: " + std::string(to_string(sol.status)));
    Snapshot s;
    s.cost = sol.objective;
    for (std::size_t g = 0; g < net.num_generators(); ++g)
        s.bid_cost += bids[g] * sol.x[static_cast<Eigen::Index>(lay.gen_col(g))];
    for (BusId n = 0; n < net.num_buses(); ++n) s.shed += sol.x[static_cast<Eigen::Index>(lay.shed_col(n))];
    for (auto l : candidates) {
        const auto r = static_cast<Eigen::Index>(2 * l);
        s.capacity_slope.push_back(-(sol.duals_ub[r] + sol.duals_ub[r + 1]));
    }
    return s;
}

Stage1Result finish(const NetworkCase& net, const std::vector<std::size_t>& candidates, std::vector<double> expansion,
                    double planned_step_cost, double w_anu) {
    Stage1Result r;
    for (auto& x : expansion) x = std::max(0.0, x);
    r.expansion = std::move(expansion);
    r.planned_operational = w_anu * planned_step_cost;
    for (std::size_t k = 0; k < candidates.size(); ++k)
        r.expansion_cost += net.lines[candidates[k]].expansion_cost * r.expansion[k];
    r.objective = r.planned_operational + r.expansion_cost;
    return r;
}

}  // namespace

Stage1Result stage1_expansion_lp(const NetworkCase& net, const std::vector<double>& fixed_bids, double w_anu,
                                 const Stage1Options& opts) {
    check_bids(net, fixed_bids, w_anu);
    const auto candidates = net.candidate_lines();
    const std::size_t K = candidates.size();
    const std::size_t T = net.profile.horizon();
    std::vector<double> base(net.num_lines());
    for (std::size_t l = 0; l < net.num_lines(); ++l) base[l] = net.lines[l].base_capacity;

    // Master over [dL (K) | eta (T)] in per-step cost units (objective / w_anu).
    auto master = LinearProgram::with_variables(K + T);
    const double cap_limit = net.total_capacity();
    for (std::size_t k = 0; k < K; ++k) {
        master.c[static_cast<Eigen::Index>(k)] = net.lines[candidates[k]].expansion_cost / w_anu;
        master.upper[static_cast<Eigen::Index>(k)] = cap_limit;
    }
    for (std::size_t t = 0; t < T; ++t) master.c[static_cast<Eigen::Index>(K + t)] = 1.0;
    master.A_eq.resize(0, static_cast<Eigen::Index>(K + T));
    master.b_eq.resize(0);
    std::vector<Eigen::RowVectorXd> cut_rows;
    std::vector<double> cut_rhs;

    std::vector<double> x(K, 0.0);
    std::vector<double> best_x = x;
    double best_upper = std::numeric_limits<double>::infinity();
    double best_bid_cost = 0.0, best_shed = 0.0;
    double lower = -std::numeric_limits<double>::infinity();
    std::size_t iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        auto caps = base;
        for (std::size_t k = 0; k < K; ++k) caps[candidates[k]] += x[k];
        double upper = 0.0, bid_cost = 0.0, shed = 0.0;
        for (std::size_t k = 0; k < K; ++k) upper += net.lines[candidates[k]].expansion_cost / w_anu * x[k];
        for (std::size_t t = 0; t < T; ++t) {
            const auto s = solve_snapshot(net, fixed_bids, t, caps, candidates, opts);
            upper += s.cost;
            bid_cost += s.bid_cost;
            shed += s.shed;
            // eta_t >= cost + slope . (dL - x)
            Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(K + T));
            double rhs = -s.cost;
            for (std::size_t k = 0; k < K; ++k) {
                row[static_cast<Eigen::Index>(k)] = s.capacity_slope[k];
                rhs += s.capacity_slope[k] * x[k];
            }
            row[static_cast<Eigen::Index>(K + t)] = -1.0;
            cut_rows.push_back(row);
            cut_rhs.push_back(rhs);
        }
        if (upper < best_upper) {
            best_upper = upper;
            best_x = x;
            best_bid_cost = bid_cost;
            best_shed = shed;
        }
        if (K == 0) break;
        if (best_upper - lower <= opts.relative_gap * std::max(1.0, std::abs(best_upper))) break;

        master.A_ub.resize(static_cast<Eigen::Index>(cut_rows.size()), static_cast<Eigen::Index>(K + T));
        master.b_ub.resize(static_cast<Eigen::Index>(cut_rows.size()));
        for (std::size_t r = 0; r < cut_rows.size(); ++r) {
            master.A_ub.row(static_cast<Eigen::Index>(r)) = cut_rows[r];
            master.b_ub[static_cast<Eigen::Index>(r)] = cut_rhs[r];
        }
        const auto sol = solve(master, opts.solver);
        if (!sol.optimal()) throw SolverError("stage 1: master problem failed: " + std::string(to_string(sol.status)));
        lower = std::max(lower, sol.objective);
        for (std::size_t k = 0; k < K; ++k) x[k] = sol.x[static_cast<Eigen::Index>(k)];
        if (best_upper - lower <= opts.relative_gap * std::max(1.0, std::abs(best_upper))) {
            ++iter;
            break;
        }
    }
    if (best_shed > 1e-6)
        throw InfeasibleError("stage 1: demand cannot be served even with expansion (" + std::to_string(best_shed) +
                              " MWh shed)");
    auto r = finish(net, candidates, best_x, best_bid_cost, w_anu);
    r.iterations = iter;
    r.lower_bound = w_anu * (K == 0 ? best_upper : lower);
    return r;
}

Stage1Result stage1_expansion_direct(const NetworkCase& net, const std::vector<double>& fixed_bids, double w_anu,
                                     const SolverOptions& solver) {
    check_bids(net, fixed_bids, w_anu);
    const auto candidates = net.candidate_lines();
    const std::size_t K = candidates.size();
    const std::size_t T = net.profile.horizon();
    std::vector<Eigen::Index> cand_col(net.num_lines(), -1);
    for (std::size_t k = 0; k < K; ++k) cand_col[candidates[k]] = static_cast<Eigen::Index>(k);

    std::vector<LinearProgram> blocks;
    std::vector<ClearingLayout> layouts;
    for (std::size_t t = 0; t < T; ++t) {
        ClearingInput in;
        in.bids = fixed_bids;
        in.demands = net.demands_at(t);
        for (const auto& l : net.lines) in.capacities.push_back(l.base_capacity);
        ClearingLayout lay;
        blocks.push_back(build_lp(net, in, &lay));
        layouts.push_back(lay);
    }
    const auto nv = static_cast<Eigen::Index>(blocks.front().num_vars());
    const auto ne = static_cast<Eigen::Index>(blocks.front().num_eq());
    const auto nu = static_cast<Eigen::Index>(blocks.front().num_ub());
    const auto Ti = static_cast<Eigen::Index>(T);
    const auto Ki = static_cast<Eigen::Index>(K);

    auto lp = LinearProgram::with_variables(K + T * static_cast<std::size_t>(nv));
    lp.A_eq = Eigen::MatrixXd::Zero(Ti * ne, lp.c.size());
    lp.b_eq.resize(Ti * ne);
    lp.A_ub = Eigen::MatrixXd::Zero(Ti * nu, lp.c.size());
    lp.b_ub.resize(Ti * nu);
    for (std::size_t k = 0; k < K; ++k) lp.c[static_cast<Eigen::Index>(k)] = net.lines[candidates[k]].expansion_cost;
    for (Eigen::Index t = 0; t < Ti; ++t) {
        const auto& b = blocks[static_cast<std::size_t>(t)];
        const Eigen::Index col = Ki + t * nv;
        lp.c.segment(col, nv) = w_anu * b.c;
        lp.lower.segment(col, nv) = b.lower;
        lp.upper.segment(col, nv) = b.upper;
        lp.A_eq.block(t * ne, col, ne, nv) = b.A_eq;
        lp.b_eq.segment(t * ne, ne) = b.b_eq;
        lp.A_ub.block(t * nu, col, nu, nv) = b.A_ub;
        lp.b_ub.segment(t * nu, nu) = b.b_ub;
        for (std::size_t l = 0; l < net.num_lines(); ++l) {
            if (cand_col[l] < 0) continue;
            const auto r = t * nu + static_cast<Eigen::Index>(2 * l);
            lp.A_ub(r, cand_col[l]) = -1.0;
            lp.A_ub(r + 1, cand_col[l]) = -1.0;
        }
    }
    const auto sol = solve(lp, solver);
    if (sol.status == LpStatus::infeasible)
        throw InfeasibleError("stage 1: demand cannot be served even with expansion");
    if (!sol.optimal()) throw SolverError("stage 1: joint LP failed: " + std::string(to_string(sol.status)));
    std::vector<double> dl(K);
    for (std::size_t k = 0; k < K; ++k) dl[k] = sol.x[static_cast<Eigen::Index>(k)];
    double bid_cost = 0.0;
    for (Eigen::Index t = 0; t < Ti; ++t)
        for (std::size_t g = 0; g < net.num_generators(); ++g)
            bid_cost += fixed_bids[g] * sol.x[Ki + t * nv + static_cast<Eigen::Index>(layouts[0].gen_col(g))];
    auto r = finish(net, candidates, dl, bid_cost, w_anu);
    r.iterations = 1;
    r.lower_bound = sol.objective;
    return r;
}

}  // namespace gridco
