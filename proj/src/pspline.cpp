#include "cpspline/pspline.hpp"

#include "cpspline/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace cpspline {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void Dataset::validate() const {
    if (x.size() != y.size() || (!w.empty() && w.size() != x.size())) {
        throw Error(ErrorKind::InvalidArgument, "dataset columns have different lengths");
    }
    if (x.size() < 4) {
        throw Error(ErrorKind::InvalidArgument, "dataset needs at least 4 points");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
            throw Error(ErrorKind::InvalidArgument, "non-finite value in row " + std::to_string(i));
        }
        if (!w.empty() && !(w[i] > 0.0 && std::isfinite(w[i]))) {
            throw Error(ErrorKind::InvalidArgument, "weights must be positive (row " + std::to_string(i) + ")");
        }
    }
}

void Dataset::validate(const KnotGrid& grid) const {
    validate();
    for (double xi : x) {
        if (!grid.contains(xi)) {
            throw Error(ErrorKind::OutOfDomain, "data site " + std::to_string(xi) + " outside the knot grid domain");
        }
    }
}

double Dataset::min_site() const { return *std::min_element(x.begin(), x.end()); }
double Dataset::max_site() const { return *std::max_element(x.begin(), x.end()); }

MatrixXd DesignMatrices::dense_basis() const {
    const int n = dimension();
    MatrixXd b = MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), n);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int r = 0; r < 4; ++r) {
            b(static_cast<Eigen::Index>(i), rows[i].first + r) = rows[i].values[static_cast<std::size_t>(r)];
        }
    }
    return b;
}

MatrixXd second_difference(int n) {
    MatrixXd d = MatrixXd::Zero(n - 2, n);
    for (int r = 0; r < n - 2; ++r) {
        d(r, r) = 1.0;
        d(r, r + 1) = -2.0;
        d(r, r + 2) = 1.0;
    }
    return d;
}

MatrixXd penalty_matrix(int n) {
    MatrixXd t = MatrixXd::Zero(n, n);
    const double stencil[3] = {1.0, -2.0, 1.0};
    // t_j for 1-based j = 3..n touches 0-based columns j-3, j-2, j-1.
    for (int j = 2; j < n; ++j) {
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                t(j - 2 + r, j - 2 + c) += stencil[r] * stencil[c];
            }
        }
    }
    return t;
}

DesignMatrices assemble(const Dataset& data, const KnotGrid& grid, Execution exec) {
    data.validate(grid);
    const int n = grid.dimension();
    DesignMatrices dm;
    dm.rows.reserve(data.size());
    for (double xi : data.x) {
        dm.rows.push_back(local_basis(grid, xi));
    }
    std::vector<double> w = data.w;
    if (w.empty()) {
        w.assign(data.size(), 1.0);
    }
    auto acc = kernels::accumulate_normal(dm.rows, data.y, w, n, exec);
    dm.gram = 0.5 * (acc.gram + acc.gram.transpose());
    dm.rhs = std::move(acc.rhs);
    dm.penalty = penalty_matrix(n);
    return dm;
}

PenalizedSystem::PenalizedSystem(const DesignMatrices& dm, const KnotGrid& grid) : grid_(grid), design_(dm) {
    const int n = dm.dimension();
    if (n != grid.dimension()) {
        throw Error(ErrorKind::InvalidArgument, "design matrices do not match the knot grid");
    }
    MatrixXd null_space(n, 2);
    const double mean = 0.5 * (n - 1);
    for (int j = 0; j < n; ++j) {
        null_space(j, 0) = 1.0;
        null_space(j, 1) = j - mean;
    }
    null_space.col(0).normalize();
    null_space.col(1).normalize();
    Eigen::HouseholderQR<MatrixXd> qr(null_space);
    basis_ = qr.householderQ() * MatrixXd::Identity(n, n);

    const MatrixXd r = basis_.rightCols(n - 2);
    reduced_penalty_ = r.transpose() * dm.penalty * r;
    reduced_penalty_ = 0.5 * (reduced_penalty_ + reduced_penalty_.transpose());
    gram_ = basis_.transpose() * dm.gram * basis_;
    gram_ = 0.5 * (gram_ + gram_.transpose());
    rhs_ = basis_.transpose() * dm.rhs;
}

MatrixXd PenalizedSystem::hessian(double lambda) const {
    MatrixXd h = gram_;
    const int n = dimension();
    h.bottomRightCorner(n - 2, n - 2) += (lambda * lambda) * reduced_penalty_;
    return h;
}

VectorXd PenalizedSystem::solve(double lambda) const {
    try {
        return solve_normal_equations(hessian(lambda), rhs_);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::NotPositiveDefinite) {
            throw Error(ErrorKind::SingularSystem,
                        "normal equations are singular (need >= 2 distinct sites and lambda > 0)");
        }
        throw;
    }
}

double PenalizedSystem::smoother_trace(double lambda) const {
    const auto chol = checked_cholesky(hessian(lambda));
    return chol.solve(gram_).trace();
}

SplineModel fit_pspline(const PenalizedSystem& system, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw Error(ErrorKind::InvalidArgument, "lambda must be finite and >= 0");
    }
    return SplineModel(system.grid(), system.to_coefficients(system.solve(lambda)));
}

SplineModel fit_pspline(const Dataset& data, const KnotGrid& grid, double lambda) {
    return fit_pspline(PenalizedSystem(assemble(data, grid), grid), lambda);
}

QuadraticProgram constrained_program(const PenalizedSystem& system, double lambda, const ConstraintSet& cs) {
    const KnotGrid& grid = system.grid();
    const int n = system.dimension();
    const MatrixXd& v = system.basis();

    auto rows_at = [&](const std::vector<Bound>& bounds, MatrixXd& rows, VectorXd& values) {
        rows.resize(static_cast<Eigen::Index>(bounds.size()), n);
        values.resize(static_cast<Eigen::Index>(bounds.size()));
        for (std::size_t i = 0; i < bounds.size(); ++i) {
            const LocalBasis local = local_basis(grid, bounds[i].site);
            // Row of B at the site, mapped to penalty-aligned coordinates.
            VectorXd row = VectorXd::Zero(n);
            for (int r = 0; r < 4; ++r) {
                row += local.values[static_cast<std::size_t>(r)] * v.row(local.first + r).transpose();
            }
            rows.row(static_cast<Eigen::Index>(i)) = row.transpose();
            values[static_cast<Eigen::Index>(i)] = bounds[i].value;
        }
    };

    QuadraticProgram qp;
    qp.hessian = 2.0 * system.hessian(lambda);
    qp.linear = -2.0 * system.rhs();
    rows_at(cs.lower, qp.lower_rows, qp.lower_bounds);
    rows_at(cs.upper, qp.upper_rows, qp.upper_bounds);
    return qp;
}

ConstrainedFit fit_constrained(const PenalizedSystem& system, double lambda, const ConstraintSet& cs,
                               const QpSolution* warm) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw Error(ErrorKind::InvalidArgument, "lambda must be finite and >= 0");
    }
    for (const Bound& b : cs.lower) {
        if (!(b.value >= 0.0)) {
            throw Error(ErrorKind::InvalidArgument, "lower bounds must be >= 0");
        }
    }
    QpSolution sol = solve_qp(constrained_program(system, lambda, cs), warm);
    SplineModel model(system.grid(), system.to_coefficients(sol.x));
    return ConstrainedFit{std::move(model), std::move(sol)};
}

ConstrainedFit fit_constrained(const Dataset& data, const KnotGrid& grid, double lambda, const ConstraintSet& cs,
                               const QpSolution* warm) {
    return fit_constrained(PenalizedSystem(assemble(data, grid), grid), lambda, cs, warm);
}

SplineModel fit_nnp(const PenalizedSystem& system, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw Error(ErrorKind::InvalidArgument, "lambda must be finite and >= 0");
    }
    const int n = system.dimension();
    QuadraticProgram qp = QuadraticProgram::unconstrained(2.0 * system.hessian(lambda), -2.0 * system.rhs());
    // a = Vc >= 0.
    qp.lower_rows = system.basis();
    qp.lower_bounds = VectorXd::Zero(n);
    const QpSolution sol = solve_qp(qp);
    VectorXd a = system.to_coefficients(sol.x);
    // Active bounds hold to rounding; snap so the model is exactly nonnegative.
    a = a.cwiseMax(0.0);
    return SplineModel(system.grid(), std::move(a));
}

SplineModel fit_nnp(const Dataset& data, const KnotGrid& grid, double lambda) {
    return fit_nnp(PenalizedSystem(assemble(data, grid), grid), lambda);
}

double rmse(const SplineModel& model, const Dataset& data) {
    double sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double r = data.y[i] - model.value(data.x[i]);
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(data.size()));
}

double residual_norm(const SplineModel& model, const Dataset& data) {
    double sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double r = data.y[i] - model.value(data.x[i]);
        sum += data.weight(i) * r * r;
    }
    return std::sqrt(sum);
}

double penalty_norm(const VectorXd& a) {
    double sum = 0.0;
    for (Eigen::Index j = 2; j < a.size(); ++j) {
        const double d = a[j] - 2.0 * a[j - 1] + a[j - 2];
        sum += d * d;
    }
    return std::sqrt(sum);
}

double pspline_objective(const SplineModel& model, const Dataset& data, double lambda) {
    const double r = residual_norm(model, data);
    const double p = penalty_norm(model.coefficients());
    return r * r + lambda * lambda * p * p;
}

}  // namespace cpspline
