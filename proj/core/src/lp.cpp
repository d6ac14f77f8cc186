#include "gridco/lp.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gridco/error.hpp"

namespace gridco {

LinearProgram LinearProgram::with_variables(std::size_t n) {
    LinearProgram lp;
    const auto nn = static_cast<Eigen::Index>(n);
    lp.c = Eigen::VectorXd::Zero(nn);
    lp.A_eq.resize(0, nn);
    lp.b_eq.resize(0);
    lp.A_ub.resize(0, nn);
    lp.b_ub.resize(0);
    lp.lower = Eigen::VectorXd::Zero(nn);
    lp.upper = Eigen::VectorXd::Constant(nn, kInf);
    return lp;
}

void LinearProgram::check() const {
    const auto n = c.size();
    auto dim = [](const std::string& what) { throw DimensionError("linear program: " + what); };
    if (A_eq.cols() != n || A_ub.cols() != n) dim("constraint matrices must have one column per variable");
    if (b_eq.size() != A_eq.rows()) dim("b_eq length differs from A_eq rows");
    if (b_ub.size() != A_ub.rows()) dim("b_ub length differs from A_ub rows");
    if (lower.size() != n || upper.size() != n) dim("bounds must have one entry per variable");
    if (c.hasNaN() || A_eq.hasNaN() || b_eq.hasNaN() || A_ub.hasNaN() || b_ub.hasNaN() || lower.hasNaN() ||
        upper.hasNaN())
        throw ValidationError("linear program: NaN coefficient");
    for (Eigen::Index j = 0; j < n; ++j) {
        if (lower[j] > upper[j]) throw ValidationError("linear program: lower bound above upper bound");
        if (lower[j] == kInf || upper[j] == -kInf) throw ValidationError("linear program: bound at wrong infinity");
    }
    if (!A_eq.allFinite() || !A_ub.allFinite() || !b_eq.allFinite() || !b_ub.allFinite() || !c.allFinite())
        throw ValidationError("linear program: infinite coefficient");
}

std::string_view to_string(LpStatus s) {
    switch (s) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded";
        case LpStatus::iteration_limit: return "iteration_limit";
    }
    return "unknown";
}

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Bounded-variable primal simplex on a dense tableau.
//
// Columns: structural [0, n), slacks of the <= rows [n, n + m_ub),
// artificials after that. Nonbasic variables rest at a finite bound
// (or at 0 when free).
class Simplex {
public:
    Simplex(const LinearProgram& lp, const SolverOptions& opts) : lp_(lp), opts_(opts) {
        n_ = lp.c.size();
        m_eq_ = lp.A_eq.rows();
        m_ub_ = lp.A_ub.rows();
        m_ = m_eq_ + m_ub_;
        limit_ = opts.iteration_limit.value_or(50 * static_cast<std::size_t>(m_ + n_));
        build();
    }

    LpSolution run() {
        LpSolution sol;
        if (!art_row_.empty()) {
            VectorXd cost = VectorXd::Zero(ncols_);
            for (Index k = 0; k < static_cast<Index>(art_row_.size()); ++k) cost[n_ + m_ub_ + k] = 1.0;
            auto st = iterate(cost);
            if (st != LpStatus::optimal) return finish_failure(st == LpStatus::unbounded ? LpStatus::infeasible : st);
            double infeas = 0.0;
            for (Index k = 0; k < static_cast<Index>(art_row_.size()); ++k) infeas += x_[n_ + m_ub_ + k];
            double scale = 1.0;
            if (m_eq_ > 0) scale = std::max(scale, lp_.b_eq.cwiseAbs().maxCoeff());
            if (m_ub_ > 0) scale = std::max(scale, lp_.b_ub.cwiseAbs().maxCoeff());
            if (infeas > 1e-9 * scale) return finish_failure(LpStatus::infeasible);
            retire_artificials();
        }
        VectorXd cost = VectorXd::Zero(ncols_);
        cost.head(n_) = lp_.c;
        auto st = iterate(cost);
        if (st != LpStatus::optimal) return finish_failure(st);
        return finish_optimal();
    }

private:
    const LinearProgram& lp_;
    const SolverOptions& opts_;
    Index n_ = 0, m_eq_ = 0, m_ub_ = 0, m_ = 0, ncols_ = 0;
    std::size_t limit_ = 0, iterations_ = 0, since_refactor_ = 0;

    MatrixXd T_;                 // B^-1 [A | I_ub | art]
    VectorXd x_, lo_, up_;
    std::vector<Index> basis_;   // column basic in each row
    std::vector<Index> pos_;     // row of a basic column, -1 otherwise
    std::vector<Index> art_row_;
    std::vector<double> art_sign_;

    double row_rhs(Index r) const { return r < m_eq_ ? lp_.b_eq[r] : lp_.b_ub[r - m_eq_]; }

    // Entry (r, j) of the full constraint matrix [A | I_ub | art].
    double entry(Index r, Index j) const {
        if (j < n_) return r < m_eq_ ? lp_.A_eq(r, j) : lp_.A_ub(r - m_eq_, j);
        if (j < n_ + m_ub_) return (r == m_eq_ + (j - n_)) ? 1.0 : 0.0;
        const auto k = static_cast<std::size_t>(j - n_ - m_ub_);
        return art_row_[k] == r ? art_sign_[k] : 0.0;
    }

    void build() {
        // Structural columns start at a finite bound.
        VectorXd xs(n_);
        for (Index j = 0; j < n_; ++j) {
            if (std::isfinite(lp_.lower[j])) xs[j] = lp_.lower[j];
            else if (std::isfinite(lp_.upper[j])) xs[j] = lp_.upper[j];
            else xs[j] = 0.0;
        }
        VectorXd resid(m_);
        if (m_eq_ > 0) resid.head(m_eq_) = lp_.b_eq - lp_.A_eq * xs;
        if (m_ub_ > 0) resid.tail(m_ub_) = lp_.b_ub - lp_.A_ub * xs;

        // Slack basic where the start point satisfies the <= row, artificial otherwise.
        basis_.assign(static_cast<std::size_t>(m_), -1);
        std::vector<double> basic_value(static_cast<std::size_t>(m_), 0.0);
        for (Index r = 0; r < m_; ++r) {
            const bool ub = r >= m_eq_;
            if (ub && resid[r] >= 0.0) {
                basis_[r] = n_ + (r - m_eq_);
                basic_value[r] = resid[r];
            } else {
                art_row_.push_back(r);
                art_sign_.push_back(resid[r] >= 0.0 ? 1.0 : -1.0);
                basis_[r] = -1;  // patched below
                basic_value[r] = std::abs(resid[r]);
            }
        }
        const Index n_art = static_cast<Index>(art_row_.size());
        ncols_ = n_ + m_ub_ + n_art;
        for (Index k = 0; k < n_art; ++k) basis_[art_row_[k]] = n_ + m_ub_ + k;

        x_ = VectorXd::Zero(ncols_);
        lo_ = VectorXd::Zero(ncols_);
        up_ = VectorXd::Constant(ncols_, kInf);
        x_.head(n_) = xs;
        lo_.head(n_) = lp_.lower;
        up_.head(n_) = lp_.upper;
        for (Index r = 0; r < m_; ++r) x_[basis_[r]] = basic_value[r];

        pos_.assign(static_cast<std::size_t>(ncols_), -1);
        for (Index r = 0; r < m_; ++r) pos_[basis_[r]] = r;

        // B is diagonal with entries +-1, so B^-1 A is a row scaling.
        T_.resize(m_, ncols_);
        for (Index r = 0; r < m_; ++r) {
            const double s = (basis_[r] >= n_ + m_ub_) ? art_sign_[basis_[r] - n_ - m_ub_] : 1.0;
            for (Index j = 0; j < ncols_; ++j) T_(r, j) = entry(r, j) / s;
        }
    }

    bool fixed(Index j) const { return lo_[j] == up_[j]; }

    // Recompute the tableau and basic values from scratch via LU on B.
    void refactor() {
        MatrixXd B(m_, m_);
        for (Index r = 0; r < m_; ++r)
            for (Index i = 0; i < m_; ++i) B(i, r) = entry(i, basis_[r]);
        Eigen::PartialPivLU<MatrixXd> lu(B);
        MatrixXd full(m_, ncols_);
        for (Index j = 0; j < ncols_; ++j)
            for (Index i = 0; i < m_; ++i) full(i, j) = entry(i, j);
        T_ = lu.solve(full);
        recompute_basics(lu);
        since_refactor_ = 0;
    }

    void recompute_basics(const Eigen::PartialPivLU<MatrixXd>& lu) {
        VectorXd rhs(m_);
        for (Index i = 0; i < m_; ++i) rhs[i] = row_rhs(i);
        for (Index j = 0; j < ncols_; ++j) {
            if (pos_[j] >= 0 || x_[j] == 0.0) continue;
            for (Index i = 0; i < m_; ++i) rhs[i] -= entry(i, j) * x_[j];
        }
        VectorXd xb = lu.solve(rhs);
        for (Index r = 0; r < m_; ++r) x_[basis_[r]] = xb[r];
    }

    void pivot(Index r, Index q) {
        const double piv = T_(r, q);
        T_.row(r) /= piv;
        VectorXd col = T_.col(q);
        col[r] = 0.0;
        T_.noalias() -= col * T_.row(r);
        T_.col(q).setZero();
        T_(r, q) = 1.0;
        pos_[basis_[r]] = -1;
        basis_[r] = q;
        pos_[q] = r;
        ++since_refactor_;
    }

    LpStatus iterate(const VectorXd& cost) {
        auto reduced = [&]() {
            Eigen::RowVectorXd d = cost.transpose();
            for (Index r = 0; r < m_; ++r) {
                const double cb = cost[basis_[r]];
                if (cb != 0.0) d.noalias() -= cb * T_.row(r);
            }
            return d;
        };
        Eigen::RowVectorXd d = reduced();
        std::size_t degenerate_run = 0;

        while (true) {
            if (iterations_ >= limit_) return LpStatus::iteration_limit;
            if (since_refactor_ >= opts_.refactor_every) {
                refactor();
                d = reduced();
            }
            const bool bland =
                opts_.rule == PivotRule::bland || degenerate_run >= opts_.degenerate_switch;

            // Pricing.
            Index q = -1;
            double best = 0.0;
            for (Index j = 0; j < ncols_; ++j) {
                if (pos_[j] >= 0 || fixed(j)) continue;
                const double dj = d[j];
                const bool can_up = x_[j] < up_[j];
                const bool can_down = x_[j] > lo_[j];
                const bool improving = (dj < -opts_.optimality_tol && can_up) || (dj > opts_.optimality_tol && can_down);
                if (!improving) continue;
                if (bland) {
                    q = j;
                    break;
                }
                if (std::abs(dj) > best) {
                    best = std::abs(dj);
                    q = j;
                }
            }
            if (q < 0) return LpStatus::optimal;
            const double dir = d[q] < 0.0 ? 1.0 : -1.0;

            // Ratio test; basic x_B[r] moves by -t * dir * T(r, q).
            double step = up_[q] - lo_[q];  // bound flip, +inf when a side is open
            Index leave = -1;
            bool leave_to_upper = false;
            double leave_alpha = 0.0;
            for (Index r = 0; r < m_; ++r) {
                const double alpha = dir * T_(r, q);
                if (std::abs(alpha) <= opts_.pivot_tol) continue;
                const Index b = basis_[r];
                double ratio;
                bool to_upper;
                if (alpha > 0.0) {
                    if (!std::isfinite(lo_[b])) continue;
                    ratio = (x_[b] - lo_[b]) / alpha;
                    to_upper = false;
                } else {
                    if (!std::isfinite(up_[b])) continue;
                    ratio = (up_[b] - x_[b]) / (-alpha);
                    to_upper = true;
                }
                ratio = std::max(ratio, 0.0);
                bool take = false;
                if (ratio < step - 1e-12) {
                    take = true;
                } else if (leave >= 0 && ratio <= step + 1e-12) {
                    take = bland ? b < basis_[leave] : std::abs(alpha) > std::abs(leave_alpha);
                }
                if (take) {
                    step = ratio;
                    leave = r;
                    leave_to_upper = to_upper;
                    leave_alpha = alpha;
                }
            }
            if (!std::isfinite(step)) return LpStatus::unbounded;

            ++iterations_;
            degenerate_run = step <= opts_.feasibility_tol ? degenerate_run + 1 : 0;

            x_[q] += dir * step;
            if (step != 0.0) {
                for (Index r = 0; r < m_; ++r) x_[basis_[r]] -= step * dir * T_(r, q);
            }
            if (leave < 0) {
                x_[q] = dir > 0 ? up_[q] : lo_[q];  // bound flip
                continue;
            }
            const Index out = basis_[leave];
            pivot(leave, q);
            x_[out] = leave_to_upper ? up_[out] : lo_[out];
            const double dq = d[q];
            d.noalias() -= dq * T_.row(leave);
            d[q] = 0.0;
        }
    }

    // After phase one: fix artificials at zero and drive basic ones out
    // where a structural or slack column can replace them.
    void retire_artificials() {
        const Index first_art = n_ + m_ub_;
        for (Index j = first_art; j < ncols_; ++j) {
            up_[j] = 0.0;
            if (pos_[j] < 0) x_[j] = 0.0;
        }
        for (Index r = 0; r < m_; ++r) {
            if (basis_[r] < first_art) continue;
            Index q = -1;
            double best = 1e-7;
            for (Index j = 0; j < first_art; ++j) {
                if (pos_[j] >= 0) continue;
                if (std::abs(T_(r, j)) > best) {
                    best = std::abs(T_(r, j));
                    q = j;
                }
            }
            if (q < 0) continue;  // redundant row
            const Index out = basis_[r];
            pivot(r, q);
            x_[out] = 0.0;
        }
        refactor();
    }

    void fill_duals(LpSolution& sol, const Eigen::PartialPivLU<MatrixXd>& lu) {
        VectorXd cb(m_);
        for (Index r = 0; r < m_; ++r) cb[r] = basis_[r] < n_ ? lp_.c[basis_[r]] : 0.0;
        VectorXd y = lu.transpose().solve(cb);
        sol.duals_eq = y.head(m_eq_);
        sol.duals_ub = -y.tail(m_ub_);
        VectorXd d = lp_.c;
        if (m_eq_ > 0) d.noalias() -= lp_.A_eq.transpose() * y.head(m_eq_);
        if (m_ub_ > 0) d.noalias() -= lp_.A_ub.transpose() * y.tail(m_ub_);
        sol.bound_lower = VectorXd::Zero(n_);
        sol.bound_upper = VectorXd::Zero(n_);
        for (Index j = 0; j < n_; ++j) {
            if (pos_[j] >= 0) continue;
            const bool at_lo = std::isfinite(lo_[j]) && x_[j] == lo_[j];
            const bool at_up = std::isfinite(up_[j]) && x_[j] == up_[j];
            if (at_lo && (!at_up || d[j] >= 0.0)) sol.bound_lower[j] = d[j];
            else if (at_up) sol.bound_upper[j] = -d[j];
        }
    }

    LpSolution finish_optimal() {
        refactor();
        MatrixXd B(m_, m_);
        for (Index r = 0; r < m_; ++r)
            for (Index i = 0; i < m_; ++i) B(i, r) = entry(i, basis_[r]);
        Eigen::PartialPivLU<MatrixXd> lu(B);
        LpSolution sol;
        sol.status = LpStatus::optimal;
        sol.x = x_.head(n_);
        // Snap structurals that drifted within tolerance of a bound.
        for (Index j = 0; j < n_; ++j) {
            if (std::isfinite(lo_[j]) && std::abs(sol.x[j] - lo_[j]) < 1e-12) sol.x[j] = lo_[j];
            if (std::isfinite(up_[j]) && std::abs(sol.x[j] - up_[j]) < 1e-12) sol.x[j] = up_[j];
        }
        if (m_ > 0) {
            fill_duals(sol, lu);
        } else {
            sol.duals_eq.resize(0);
            sol.duals_ub.resize(0);
            sol.bound_lower = VectorXd::Zero(n_);
            sol.bound_upper = VectorXd::Zero(n_);
            for (Index j = 0; j < n_; ++j) {
                if (lp_.c[j] > 0) sol.bound_lower[j] = lp_.c[j];
                else if (lp_.c[j] < 0) sol.bound_upper[j] = -lp_.c[j];
            }
        }
        sol.objective = lp_.c.dot(sol.x);
        sol.iterations = iterations_;
        return sol;
    }

    LpSolution finish_failure(LpStatus st) {
        LpSolution sol;
        sol.status = st;
        sol.x = x_.head(n_);
        sol.duals_eq = VectorXd::Zero(m_eq_);
        sol.duals_ub = VectorXd::Zero(m_ub_);
        sol.bound_lower = VectorXd::Zero(n_);
        sol.bound_upper = VectorXd::Zero(n_);
        sol.objective = st == LpStatus::unbounded ? -kInf : kInf;
        sol.iterations = iterations_;
        return sol;
    }
};

}  // namespace

LpSolution solve(const LinearProgram& lp, const SolverOptions& opts) {
    lp.check();
    Simplex simplex(lp, opts);
    return simplex.run();
}

LpCertificate certify(const LinearProgram& lp, const LpSolution& sol) {
    LpCertificate cert;
    const auto n = lp.c.size();
    const auto& x = sol.x;

    double pr = 0.0;
    if (lp.A_eq.rows() > 0) pr = std::max(pr, (lp.A_eq * x - lp.b_eq).cwiseAbs().maxCoeff());
    Eigen::VectorXd slack_ub = lp.b_ub;
    if (lp.A_ub.rows() > 0) {
        slack_ub = lp.b_ub - lp.A_ub * x;
        pr = std::max(pr, (-slack_ub).cwiseMax(0.0).maxCoeff());
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        if (std::isfinite(lp.lower[j])) pr = std::max(pr, lp.lower[j] - x[j]);
        if (std::isfinite(lp.upper[j])) pr = std::max(pr, x[j] - lp.upper[j]);
    }
    cert.primal_residual = pr;

    Eigen::VectorXd r = lp.c - sol.bound_lower + sol.bound_upper;
    if (lp.A_eq.rows() > 0) r -= lp.A_eq.transpose() * sol.duals_eq;
    if (lp.A_ub.rows() > 0) r += lp.A_ub.transpose() * sol.duals_ub;
    double dr = n > 0 ? r.cwiseAbs().maxCoeff() : 0.0;
    if (sol.duals_ub.size() > 0) dr = std::max(dr, (-sol.duals_ub).cwiseMax(0.0).maxCoeff());
    if (n > 0) {
        dr = std::max(dr, (-sol.bound_lower).cwiseMax(0.0).maxCoeff());
        dr = std::max(dr, (-sol.bound_upper).cwiseMax(0.0).maxCoeff());
    }
    cert.dual_residual = dr;

    double cs = 0.0;
    for (Eigen::Index i = 0; i < lp.b_ub.size(); ++i) cs = std::max(cs, std::abs(sol.duals_ub[i] * slack_ub[i]));
    double dual_obj = 0.0;
    if (lp.b_eq.size() > 0) dual_obj += lp.b_eq.dot(sol.duals_eq);
    if (lp.b_ub.size() > 0) dual_obj -= lp.b_ub.dot(sol.duals_ub);
    for (Eigen::Index j = 0; j < n; ++j) {
        if (sol.bound_lower[j] != 0.0) {
            cs = std::max(cs, std::abs(sol.bound_lower[j] * (x[j] - lp.lower[j])));
            dual_obj += sol.bound_lower[j] * lp.lower[j];
        }
        if (sol.bound_upper[j] != 0.0) {
            cs = std::max(cs, std::abs(sol.bound_upper[j] * (lp.upper[j] - x[j])));
            dual_obj -= sol.bound_upper[j] * lp.upper[j];
        }
    }
    cert.complementarity = cs;
    cert.primal_objective = lp.c.dot(x);
    cert.dual_objective = dual_obj;
    cert.relative_gap = std::abs(cert.primal_objective - dual_obj) / std::max(1.0, std::abs(cert.primal_objective));
    return cert;
}

}  // namespace gridco
