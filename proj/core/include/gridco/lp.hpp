#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string_view>

#include <Eigen/Dense>

namespace gridco {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// min c.x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  lower <= x <= upper.
// Bounds may be infinite.
struct LinearProgram {
    Eigen::VectorXd c;
    Eigen::MatrixXd A_eq;
    Eigen::VectorXd b_eq;
    Eigen::MatrixXd A_ub;
    Eigen::VectorXd b_ub;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    // Empty program over `n` variables with bounds [0, +inf).
    static LinearProgram with_variables(std::size_t n);

    std::size_t num_vars() const { return static_cast<std::size_t>(c.size()); }
    std::size_t num_eq() const { return static_cast<std::size_t>(A_eq.rows()); }
    std::size_t num_ub() const { return static_cast<std::size_t>(A_ub.rows()); }

    // Throws DimensionError / ValidationError on inconsistent shapes or NaNs.
    void check() const;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

std::string_view to_string(LpStatus s);

// Sign conventions (minimization):
//   duals_eq[i] = d(objective)/d(b_eq[i])          (free sign)
//   duals_ub[i] = -d(objective)/d(b_ub[i])  >= 0
//   c = A_eq' duals_eq - A_ub' duals_ub + bound_lower - bound_upper
struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    Eigen::VectorXd x;
    Eigen::VectorXd duals_eq;
    Eigen::VectorXd duals_ub;
    Eigen::VectorXd bound_lower;  // multipliers of x >= lower, >= 0
    Eigen::VectorXd bound_upper;  // multipliers of x <= upper, >= 0
    double objective = 0.0;
    std::size_t iterations = 0;

    bool optimal() const { return status == LpStatus::optimal; }
};

enum class PivotRule {
    // Largest reduced cost, falling back to Bland's rule during runs of
    // degenerate pivots.
    dantzig_bland,
    bland,
};

struct SolverOptions {
    double feasibility_tol = 1e-8;
    double optimality_tol = 1e-9;
    double pivot_tol = 1e-10;
    PivotRule rule = PivotRule::dantzig_bland;
    // Consecutive degenerate pivots before Bland's rule takes over.
    std::size_t degenerate_switch = 20;
    // Defaults to 50 * (rows + cols).
    std::optional<std::size_t> iteration_limit;
    std::size_t refactor_every = 100;
};

LpSolution solve(const LinearProgram& lp, const SolverOptions& opts = {});

// KKT residuals of an optimal primal/dual pair.
struct LpCertificate {
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double complementarity = 0.0;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double relative_gap = 0.0;
};

LpCertificate certify(const LinearProgram& lp, const LpSolution& sol);

}  // namespace gridco
