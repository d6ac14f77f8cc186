#include "gridco/dcopf.hpp"

#include <cmath>
#include <string>

#include "gridco/error.hpp"

namespace gridco {

ClearingInput truthful_input(const NetworkCase& net, std::size_t t, std::optional<double> shed_penalty) {
    ClearingInput in;
    for (const auto& g : net.generators) in.bids.push_back(g.marginal_cost);
    in.demands = net.demands_at(t);
    for (const auto& l : net.lines) in.capacities.push_back(l.base_capacity);
    in.shed_penalty = shed_penalty;
    return in;
}

namespace {

void check_input(const NetworkCase& net, const ClearingInput& in) {
    auto dim = [](const std::string& what, std::size_t got, std::size_t want) {
        throw DimensionError("clearing input: " + what + " has " + std::to_string(got) + " entries, expected " +
                             std::to_string(want));
    };
    if (in.bids.size() != net.num_generators()) dim("bids", in.bids.size(), net.num_generators());
    if (in.demands.size() != net.num_buses()) dim("demands", in.demands.size(), net.num_buses());
    if (in.capacities.size() != net.num_lines()) dim("capacities", in.capacities.size(), net.num_lines());
    for (double b : in.bids)
        if (!(b > 0.0) || !std::isfinite(b)) throw ValidationError("clearing input: bids must be positive and finite");
    for (double d : in.demands)
        if (!(d >= 0.0) || !std::isfinite(d)) throw ValidationError("clearing input: demands must be >= 0");
    for (double c : in.capacities)
        if (!(c >= 0.0) || std::isnan(c)) throw ValidationError("clearing input: capacities must be >= 0");
    if (in.shed_penalty && !(*in.shed_penalty > 0.0))
        throw ValidationError("clearing input: shed penalty must be positive");
}

}  // namespace

LinearProgram build_lp(const NetworkCase& net, const ClearingInput& input, ClearingLayout* layout_out) {
    check_input(net, input);
    ClearingLayout lay;
    lay.num_generators = net.num_generators();
    lay.num_angles = net.num_buses() - 1;
    lay.num_shed = input.shed_penalty ? net.num_buses() : 0;
    lay.slack = net.slack_bus;

    const auto nv = lay.num_vars();
    auto lp = LinearProgram::with_variables(nv);
    const auto nb = static_cast<Eigen::Index>(net.num_buses());
    const auto nl = static_cast<Eigen::Index>(net.num_lines());
    lp.A_eq = Eigen::MatrixXd::Zero(nb, static_cast<Eigen::Index>(nv));
    lp.b_eq = Eigen::VectorXd::Zero(nb);
    lp.A_ub = Eigen::MatrixXd::Zero(2 * nl, static_cast<Eigen::Index>(nv));
    lp.b_ub = Eigen::VectorXd::Zero(2 * nl);

    for (std::size_t g = 0; g < net.num_generators(); ++g) {
        const auto col = static_cast<Eigen::Index>(lay.gen_col(g));
        lp.c[col] = input.bids[g];
        lp.upper[col] = net.generators[g].p_max;
        lp.A_eq(static_cast<Eigen::Index>(net.generators[g].bus), col) += 1.0;
    }
    for (BusId n = 0; n < net.num_buses(); ++n) {
        lp.b_eq[static_cast<Eigen::Index>(n)] = input.demands[n];
        if (n != lay.slack) {
            const auto col = static_cast<Eigen::Index>(lay.angle_col(n));
            lp.lower[col] = -kInf;
            lp.upper[col] = kInf;
        }
        if (lay.num_shed > 0) {
            const auto col = static_cast<Eigen::Index>(lay.shed_col(n));
            lp.c[col] = *input.shed_penalty;
            lp.upper[col] = input.demands[n];
            lp.A_eq(static_cast<Eigen::Index>(n), col) = 1.0;
        }
    }
    // Flow f = base * b * (theta_from - theta_to) leaves `from` and enters `to`.
    for (std::size_t l = 0; l < net.num_lines(); ++l) {
        const auto& line = net.lines[l];
        const double k = net.base_mva * line.susceptance;
        const auto row = static_cast<Eigen::Index>(l);
        auto add = [&](BusId bus, double coef) {
            if (bus == lay.slack) return;
            const auto col = static_cast<Eigen::Index>(lay.angle_col(bus));
            lp.A_eq(static_cast<Eigen::Index>(line.from_bus), col) -= coef;
            lp.A_eq(static_cast<Eigen::Index>(line.to_bus), col) += coef;
            lp.A_ub(2 * row, col) += coef;
            lp.A_ub(2 * row + 1, col) -= coef;
        };
        add(line.from_bus, k);
        add(line.to_bus, -k);
        lp.b_ub[2 * row] = input.capacities[l];
        lp.b_ub[2 * row + 1] = input.capacities[l];
    }
    if (layout_out) *layout_out = lay;
    return lp;
}

ClearingResult clear_market(const NetworkCase& net, const ClearingInput& input, const SolverOptions& opts) {
    ClearingLayout lay;
    const auto lp = build_lp(net, input, &lay);
    const auto sol = solve(lp, opts);
    if (sol.status == LpStatus::infeasible)
        throw InfeasibleError("market clearing infeasible: demand cannot be served within network limits");
    if (sol.status != LpStatus::optimal)
        throw SolverError("market clearing failed: solver status " + std::string(to_string(sol.status)));

    ClearingResult res;
    res.dispatch.resize(net.num_generators());
    for (std::size_t g = 0; g < net.num_generators(); ++g)
        res.dispatch[g] = sol.x[static_cast<Eigen::Index>(lay.gen_col(g))];
    res.angles.assign(net.num_buses(), 0.0);
    for (BusId n = 0; n < net.num_buses(); ++n)
        if (n != lay.slack) res.angles[n] = sol.x[static_cast<Eigen::Index>(lay.angle_col(n))];
    res.flows.resize(net.num_lines());
    for (std::size_t l = 0; l < net.num_lines(); ++l) {
        const auto& line = net.lines[l];
        res.flows[l] = net.base_mva * line.susceptance * (res.angles[line.from_bus] - res.angles[line.to_bus]);
    }
    res.lmp.resize(net.num_buses());
    for (BusId n = 0; n < net.num_buses(); ++n) res.lmp[n] = sol.duals_eq[static_cast<Eigen::Index>(n)];
    res.shed.assign(net.num_buses(), 0.0);
    if (lay.num_shed > 0) {
        double total = 0.0;
        for (BusId n = 0; n < net.num_buses(); ++n) {
            res.shed[n] = sol.x[static_cast<Eigen::Index>(lay.shed_col(n))];
            total += res.shed[n];
        }
        res.shed_cost = *input.shed_penalty * total;
    }
    res.gen_price.resize(net.num_generators());
    for (std::size_t g = 0; g < net.num_generators(); ++g) res.gen_price[g] = res.lmp[net.generators[g].bus];
    res.operational_cost = operational_cost(res);
    res.objective = sol.objective;
    return res;
}

double operational_cost(const ClearingResult& result) {
    double c = 0.0;
    for (std::size_t g = 0; g < result.dispatch.size(); ++g) c += result.gen_price[g] * result.dispatch[g];
    return c;
}

}  // namespace gridco
