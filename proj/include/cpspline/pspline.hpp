/**
 * @file pspline.hpp
 * @brief Design/penalty assembly and the P-spline, NNP-spline and
 *        bound-constrained spline fits.
 *
 * The fitted coefficients minimize
 *
 *     sum_i w_i (y_i - s(x_i))^2 + lambda^2 sum_{j>=3} (a_j - 2 a_{j-1} + a_{j-2})^2
 *   = a'(Q + lambda^2 T)a - 2 btilde'a + const,
 *
 * with Q = B'WB, btilde = B'Wy and T = D2'D2 for the (n-2) x n second
 * difference operator D2.
 */
#pragma once

#include "cpspline/bspline.hpp"
#include "cpspline/kernels.hpp"
#include "cpspline/qp.hpp"

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace cpspline {

struct Dataset {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> w;  ///< empty or all ones means unweighted

    std::size_t size() const noexcept { return x.size(); }
    double weight(std::size_t i) const { return w.empty() ? 1.0 : w[i]; }

    /// Throws InvalidArgument unless lengths agree, m >= 4, values are
    /// finite and weights positive; OutOfDomain if a site leaves the grid.
    void validate(const KnotGrid& grid) const;
    void validate() const;

    double min_site() const;
    double max_site() const;
};

struct DesignMatrices {
    std::vector<LocalBasis> rows;  ///< compact rows of B
    Eigen::MatrixXd gram;          ///< Q = B'WB
    Eigen::VectorXd rhs;           ///< btilde = B'Wy
    Eigen::MatrixXd penalty;       ///< T

    int dimension() const { return static_cast<int>(gram.rows()); }
    Eigen::MatrixXd dense_basis() const;
};

/// T = sum_{j=3}^{n} t_j t_j' with t_j = (1, -2, 1) at positions j-2, j-1, j.
Eigen::MatrixXd penalty_matrix(int n);

/// The (n-2) x n second-difference operator D2 with T = D2'D2.
Eigen::MatrixXd second_difference(int n);

DesignMatrices assemble(const Dataset& data, const KnotGrid& grid, Execution exec = Execution::parallel);

/**
 * Normal equations in a penalty-aligned orthonormal basis.
 *
 * Coefficients are written a = V c with V = [P R], P an orthonormal basis of
 * the penalty null space {constants, linears} and R its complement. Then
 *
 *     V'(Q + lambda^2 T)V = V'QV + lambda^2 diag(0, 0, R'TR),
 *
 * whose Cholesky factor stays accurate for very large lambda because the
 * two unpenalized directions are eliminated first and never mix with the
 * lambda^2-scaled block.
 */
class PenalizedSystem {
public:
    PenalizedSystem(const DesignMatrices& dm, const KnotGrid& grid);

    int dimension() const { return static_cast<int>(basis_.rows()); }
    const KnotGrid& grid() const { return grid_; }
    const DesignMatrices& design() const { return design_; }

    /// V'(Q + lambda^2 T)V.
    Eigen::MatrixXd hessian(double lambda) const;
    /// V' btilde.
    const Eigen::VectorXd& rhs() const { return rhs_; }
    const Eigen::MatrixXd& gram() const { return gram_; }
    const Eigen::MatrixXd& basis() const { return basis_; }

    Eigen::VectorXd to_coefficients(const Eigen::VectorXd& c) const { return basis_ * c; }
    Eigen::VectorXd from_coefficients(const Eigen::VectorXd& a) const { return basis_.transpose() * a; }

    /// Solves the normal equations; throws SingularSystem.
    Eigen::VectorXd solve(double lambda) const;

    /// trace((Q + lambda^2 T)^{-1} Q), the effective degrees of freedom.
    double smoother_trace(double lambda) const;

private:
    KnotGrid grid_;
    DesignMatrices design_;
    Eigen::MatrixXd basis_;
    Eigen::MatrixXd gram_;
    Eigen::MatrixXd reduced_penalty_;
    Eigen::VectorXd rhs_;
};

struct Bound {
    double site = 0.0;
    double value = 0.0;
};

struct ConstraintSet {
    std::vector<Bound> lower;  ///< s(site) >= value, value >= 0
    std::vector<Bound> upper;  ///< s(site) <= value

    bool empty() const { return lower.empty() && upper.empty(); }
};

struct ConstrainedFit {
    SplineModel model;
    QpSolution qp;
};

SplineModel fit_pspline(const Dataset& data, const KnotGrid& grid, double lambda);
SplineModel fit_pspline(const PenalizedSystem& system, double lambda);

/// P-spline objective subject to a_j >= 0.
SplineModel fit_nnp(const Dataset& data, const KnotGrid& grid, double lambda);
SplineModel fit_nnp(const PenalizedSystem& system, double lambda);

/// The QP solved by fit_constrained, in the penalty-aligned coordinates of
/// `system`: Hessian 2 V'(Q + lambda^2 T)V, linear term -2 V'btilde.
QuadraticProgram constrained_program(const PenalizedSystem& system, double lambda, const ConstraintSet& cs);

ConstrainedFit fit_constrained(const Dataset& data, const KnotGrid& grid, double lambda, const ConstraintSet& cs,
                               const QpSolution* warm = nullptr);
ConstrainedFit fit_constrained(const PenalizedSystem& system, double lambda, const ConstraintSet& cs,
                               const QpSolution* warm = nullptr);

/// sqrt(mean((y_i - s(x_i))^2)).
double rmse(const SplineModel& model, const Dataset& data);

/// Weighted residual norm ||V(Ba - y)|| and penalty norm ||D2 a||.
double residual_norm(const SplineModel& model, const Dataset& data);
double penalty_norm(const Eigen::VectorXd& coefficients);

/// ||V(Ba - y)||^2 + lambda^2 a'Ta.
double pspline_objective(const SplineModel& model, const Dataset& data, double lambda);

}  // namespace cpspline
