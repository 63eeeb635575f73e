/**
 * @file qp.hpp
 * @brief Primal active-set solver for strictly convex quadratic programs
 *
 *     minimize   1/2 x'Hx + f'x
 *     subject to G x >= g      (lower rows)
 *                U x <= u      (optional upper rows)
 *
 * Constraint indices in a QpSolution number the lower rows 0..p-1 followed
 * by the upper rows p..p+k-1.
 */
#pragma once

#include <Eigen/Core>
#include <Eigen/Cholesky>

#include <vector>

namespace cpspline {

struct QuadraticProgram {
    Eigen::MatrixXd hessian;
    Eigen::VectorXd linear;
    Eigen::MatrixXd lower_rows;
    Eigen::VectorXd lower_bounds;
    Eigen::MatrixXd upper_rows;
    Eigen::VectorXd upper_bounds;

    int num_variables() const { return static_cast<int>(hessian.rows()); }
    int num_lower() const { return static_cast<int>(lower_rows.rows()); }
    int num_upper() const { return static_cast<int>(upper_rows.rows()); }

    double objective(const Eigen::VectorXd& x) const { return 0.5 * x.dot(hessian * x) + linear.dot(x); }

    /// Unconstrained QP with empty constraint blocks of matching width.
    static QuadraticProgram unconstrained(Eigen::MatrixXd hessian, Eigen::VectorXd linear);
};

struct QpSolution {
    Eigen::VectorXd x;
    std::vector<int> active;          ///< constraint indices tight at x, ascending
    std::vector<double> multipliers;  ///< >= 0, aligned with `active`
    int iterations = 0;
    double objective = 0.0;
    /// Objective after every primal step of the optimality phase.
    std::vector<double> objective_trace;
};

struct QpOptions {
    /// 0 means the default limit 50 * (n + p).
    int max_iterations = 0;
};

/// Returns the unique minimizer. A warm start contributes its primal point;
/// if that point is infeasible it is first restored to feasibility by a
/// penalized projection in the H metric. Throws NotPositiveDefinite,
/// Infeasible or IterationLimit.
QpSolution solve_qp(const QuadraticProgram& qp, const QpSolution* warm = nullptr,
                    const QpOptions& options = {});

/// Cholesky solve of an SPD system; throws NotPositiveDefinite.
Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& h, const Eigen::VectorXd& rhs);

/// Cholesky factor with a pivot check relative to each diagonal entry:
/// L_ii^2 / M_ii below `rel_pivot` counts as singular. Throws NotPositiveDefinite.
Eigen::LLT<Eigen::MatrixXd> checked_cholesky(const Eigen::MatrixXd& m, double rel_pivot = 1e-13);

/// KKT residual ||Hx + f - G'mu + U'nu||_inf for a solution.
double kkt_residual(const QuadraticProgram& qp, const QpSolution& sol);

/// Largest violation max(g - Gx, Ux - u, 0).
double max_violation(const QuadraticProgram& qp, const Eigen::VectorXd& x);

}  // namespace cpspline
