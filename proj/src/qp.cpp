#include "cpspline/qp.hpp"

#include "cpspline/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

namespace cpspline {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// All constraints as rows(i) . x >= bounds(i); upper rows enter negated.
struct Constraints {
    MatrixXd rows;
    VectorXd bounds;
    VectorXd row_norms;

    int size() const { return static_cast<int>(rows.rows()); }
    double slack(int i, const VectorXd& x) const { return rows.row(i).dot(x) - bounds[i]; }
};

Constraints unify(const QuadraticProgram& qp) {
    const int n = qp.num_variables();
    const int p = qp.num_lower();
    const int k = qp.num_upper();
    Constraints c;
    c.rows.resize(p + k, n);
    c.bounds.resize(p + k);
    if (p > 0) {
        c.rows.topRows(p) = qp.lower_rows;
        c.bounds.head(p) = qp.lower_bounds;
    }
    if (k > 0) {
        c.rows.bottomRows(k) = -qp.upper_rows;
        c.bounds.tail(k) = -qp.upper_bounds;
    }
    c.row_norms = c.rows.rowwise().norm();
    return c;
}

MatrixXd gather_rows(const Constraints& c, const std::vector<int>& idx) {
    MatrixXd a(static_cast<Eigen::Index>(idx.size()), c.rows.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        a.row(static_cast<Eigen::Index>(r)) = c.rows.row(idx[r]);
    }
    return a;
}

// Working-set rows are linearly independent when every diagonal entry of R
// in A' = QR is clearly nonzero relative to its row norm.
bool independent(const Constraints& c, const std::vector<int>& idx) {
    if (idx.empty()) {
        return true;
    }
    const MatrixXd a = gather_rows(c, idx);
    if (a.rows() > a.cols()) {
        return false;
    }
    const Eigen::HouseholderQR<MatrixXd> qr(a.transpose());
    const MatrixXd& r = qr.matrixQR();
    for (Eigen::Index k = 0; k < a.rows(); ++k) {
        if (!(std::abs(r(k, k)) > 1e-9 * c.row_norms[idx[static_cast<std::size_t>(k)]])) {
            return false;
        }
    }
    return true;
}

// Constraints tight at x, greedily filtered to a linearly independent subset.
std::vector<int> tight_working_set(const Constraints& c, const VectorXd& x, double feas_tol) {
    std::vector<int> working;
    const int n = static_cast<int>(x.size());
    for (int i = 0; i < c.size() && static_cast<int>(working.size()) < n; ++i) {
        if (std::abs(c.slack(i, x)) <= feas_tol) {
            working.push_back(i);
            if (!independent(c, working)) {
                working.pop_back();
            }
        }
    }
    return working;
}

struct Step {
    VectorXd p;
    VectorXd lambda;
    bool dependent = false;
};

// Equality-constrained step by the null-space method: with A' = [Y Z][R; 0],
// p = -Z (Z'HZ)^{-1} Z'g and R lambda = Y'(g + Hp).
Step null_space_step(const MatrixXd& h, const Eigen::LLT<MatrixXd>& chol, const VectorXd& grad, const Constraints& c,
                     const std::vector<int>& working) {
    Step out;
    const auto n = grad.size();
    const auto k = static_cast<Eigen::Index>(working.size());
    if (k == 0) {
        out.p = -chol.solve(grad);
        return out;
    }
    if (k > n) {
        out.dependent = true;
        return out;
    }
    const MatrixXd a = gather_rows(c, working);
    const Eigen::HouseholderQR<MatrixXd> qr(a.transpose());
    const MatrixXd& qr_packed = qr.matrixQR();
    for (Eigen::Index i = 0; i < k; ++i) {
        if (!(std::abs(qr_packed(i, i)) > 1e-9 * c.row_norms[working[static_cast<std::size_t>(i)]])) {
            out.dependent = true;
            return out;
        }
    }
    const MatrixXd q = qr.householderQ();
    if (k < n) {
        const auto z = q.rightCols(n - k);
        const MatrixXd reduced = z.transpose() * h * z;
        const Eigen::LLT<MatrixXd> reduced_chol(reduced);
        out.p = -(z * reduced_chol.solve(z.transpose() * grad));
    } else {
        out.p = VectorXd::Zero(n);
    }
    const VectorXd rhs = q.leftCols(k).transpose() * (grad + h * out.p);
    out.lambda = qr_packed.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(rhs);
    return out;
}

struct ActiveSetResult {
    VectorXd x;
    std::vector<int> working;
    VectorXd multipliers;
    int iterations = 0;
    std::vector<double> trace;
};

// Primal active-set iteration from a feasible x with a valid working set.
ActiveSetResult primal_active_set(const MatrixXd& h, const Eigen::LLT<MatrixXd>& chol, const VectorXd& f,
                                  const Constraints& c, VectorXd x, std::vector<int> working, int max_iter) {
    const int m = c.size();
    std::vector<char> in_working(static_cast<std::size_t>(m), 0);
    for (int i : working) {
        in_working[static_cast<std::size_t>(i)] = 1;
    }
    std::vector<char> skipped(static_cast<std::size_t>(m), 0);

    ActiveSetResult out;
    VectorXd lambda;
    for (;;) {
        if (out.iterations >= max_iter) {
            throw Error(ErrorKind::IterationLimit,
                        "active-set method exceeded " + std::to_string(max_iter) + " iterations");
        }
        ++out.iterations;

        const VectorXd grad = h * x + f;
        Step step = null_space_step(h, chol, grad, c, working);
        if (step.dependent) {
            // Newly dependent row: drop it and keep it out until x moves.
            const int dropped = working.back();
            working.pop_back();
            in_working[static_cast<std::size_t>(dropped)] = 0;
            skipped[static_cast<std::size_t>(dropped)] = 1;
            continue;
        }
        const VectorXd& p = step.p;
        lambda = step.lambda;

        const double step_tol = 1e-12 * (1.0 + x.lpNorm<Eigen::Infinity>());
        if (p.lpNorm<Eigen::Infinity>() <= step_tol) {
            const double mult_tol = 1e-11 * (1.0 + grad.lpNorm<Eigen::Infinity>());
            int worst = -1;
            double worst_value = -mult_tol;
            for (Eigen::Index r = 0; r < lambda.size(); ++r) {
                if (lambda[r] < worst_value) {
                    worst_value = lambda[r];
                    worst = static_cast<int>(r);
                }
            }
            if (worst < 0) {
                break;
            }
            in_working[static_cast<std::size_t>(working[static_cast<std::size_t>(worst)])] = 0;
            working.erase(working.begin() + worst);
            continue;
        }

        // Ratio test; ties go to the most steeply decreasing row.
        const double p_norm = p.norm();
        double alpha = 1.0;
        int block = -1;
        double block_rate = 0.0;
        for (int i = 0; i < m; ++i) {
            if (in_working[static_cast<std::size_t>(i)] || skipped[static_cast<std::size_t>(i)]) {
                continue;
            }
            const double cp = c.rows.row(i).dot(p);
            if (cp >= -1e-12 * c.row_norms[i] * p_norm) {
                continue;
            }
            const double ratio = std::max(0.0, -c.slack(i, x) / cp);
            const double rate = -cp / c.row_norms[i];
            if (ratio < alpha || (block >= 0 && ratio == alpha && rate > block_rate)) {
                alpha = ratio;
                block = i;
                block_rate = rate;
            }
        }

        if (alpha > 0.0) {
            std::fill(skipped.begin(), skipped.end(), 0);
        }
        x += alpha * p;
        out.trace.push_back(0.5 * x.dot(h * x) + f.dot(x));
        if (block >= 0) {
            working.push_back(block);
            in_working[static_cast<std::size_t>(block)] = 1;
        }
    }

    out.x = std::move(x);
    out.working = std::move(working);
    out.multipliers = lambda;
    return out;
}

// Moves x0 onto the feasible set by minimizing
//   1/2 (x - x0)'H(x - x0) + 1/2 sigma t^2 + rho t
// over (x, t) subject to G_i x + |G_i| t >= g_i on the rows x0 violates, the
// other rows unchanged, and t >= 0. The start (x0, max normalized violation)
// is feasible. The penalty is exact once rho exceeds the sum of the scaled
// projection multipliers, so rho is escalated until t vanishes.
VectorXd restore_feasibility(const MatrixXd& h, const Constraints& c, const VectorXd& x0, double feas_tol,
                             int max_iter) {
    const int n = static_cast<int>(x0.size());
    const int m = c.size();
    std::vector<char> violated(static_cast<std::size_t>(m), 0);
    double t0 = 0.0;
    for (int i = 0; i < m; ++i) {
        const double s = c.slack(i, x0);
        if (s < -feas_tol) {
            violated[static_cast<std::size_t>(i)] = 1;
            t0 = std::max(t0, -s / c.row_norms[i]);
        }
    }
    if (t0 == 0.0) {
        return x0;
    }

    const double sigma = std::max(h.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    MatrixXd hp = MatrixXd::Zero(n + 1, n + 1);
    hp.topLeftCorner(n, n) = h;
    hp(n, n) = sigma;
    const auto hp_chol = checked_cholesky(hp);

    Constraints ext;
    ext.rows = MatrixXd::Zero(m + 1, n + 1);
    ext.bounds = VectorXd::Zero(m + 1);
    ext.rows.topLeftCorner(m, n) = c.rows;
    ext.bounds.head(m) = c.bounds;
    for (int i = 0; i < m; ++i) {
        if (violated[static_cast<std::size_t>(i)]) {
            ext.rows(i, n) = c.row_norms[i];
        }
    }
    ext.rows(m, n) = 1.0;
    ext.row_norms = ext.rows.rowwise().norm();

    VectorXd z(n + 1);
    z.head(n) = x0;
    z[n] = t0;

    double rho = 1e3 * (1.0 + h.lpNorm<Eigen::Infinity>()) * (1.0 + t0);
    VectorXd fp(n + 1);
    fp.head(n) = -h * x0;
    for (int attempt = 0; attempt < 5; ++attempt) {
        fp[n] = rho;
        auto working = tight_working_set(ext, z, feas_tol);
        ActiveSetResult r = primal_active_set(hp, hp_chol, fp, ext, z, std::move(working), max_iter);
        z = r.x;
        const VectorXd x = z.head(n);
        double worst = 0.0;
        for (int i = 0; i < m; ++i) {
            worst = std::max(worst, -c.slack(i, x));
        }
        if (worst <= feas_tol) {
            return x;
        }
        rho *= 1e3;
    }
    throw Error(ErrorKind::Infeasible, "constraints admit no feasible point");
}

}  // namespace

QuadraticProgram QuadraticProgram::unconstrained(Eigen::MatrixXd hessian, Eigen::VectorXd linear) {
    const auto n = hessian.rows();
    QuadraticProgram qp;
    qp.hessian = std::move(hessian);
    qp.linear = std::move(linear);
    qp.lower_rows.resize(0, n);
    qp.lower_bounds.resize(0);
    qp.upper_rows.resize(0, n);
    qp.upper_bounds.resize(0);
    return qp;
}

Eigen::LLT<Eigen::MatrixXd> checked_cholesky(const Eigen::MatrixXd& m, double rel_pivot) {
    Eigen::LLT<MatrixXd> chol(m);
    if (chol.info() != Eigen::Success) {
        throw Error(ErrorKind::NotPositiveDefinite, "Cholesky factorization failed");
    }
    const MatrixXd& l = chol.matrixLLT();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double pivot = l(i, i) * l(i, i);
        if (!std::isfinite(pivot) || !(pivot > rel_pivot * std::abs(m(i, i)))) {
            throw Error(ErrorKind::NotPositiveDefinite,
                        "Cholesky pivot " + std::to_string(i) + " is numerically zero");
        }
    }
    return chol;
}

Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& h, const Eigen::VectorXd& rhs) {
    if (h.rows() != h.cols() || h.rows() != rhs.size()) {
        throw Error(ErrorKind::InvalidArgument, "normal equations dimension mismatch");
    }
    return checked_cholesky(h).solve(rhs);
}

double max_violation(const QuadraticProgram& qp, const Eigen::VectorXd& x) {
    double worst = 0.0;
    if (qp.num_lower() > 0) {
        worst = std::max(worst, (qp.lower_bounds - qp.lower_rows * x).maxCoeff());
    }
    if (qp.num_upper() > 0) {
        worst = std::max(worst, (qp.upper_rows * x - qp.upper_bounds).maxCoeff());
    }
    return worst;
}

double kkt_residual(const QuadraticProgram& qp, const QpSolution& sol) {
    VectorXd r = qp.hessian * sol.x + qp.linear;
    const int p = qp.num_lower();
    for (std::size_t k = 0; k < sol.active.size(); ++k) {
        const int i = sol.active[k];
        if (i < p) {
            r -= sol.multipliers[k] * qp.lower_rows.row(i).transpose();
        } else {
            r += sol.multipliers[k] * qp.upper_rows.row(i - p).transpose();
        }
    }
    return r.lpNorm<Eigen::Infinity>();
}

QpSolution solve_qp(const QuadraticProgram& qp, const QpSolution* warm, const QpOptions& options) {
    const int n = qp.num_variables();
    if (qp.hessian.cols() != n || qp.linear.size() != n || qp.lower_rows.cols() != n ||
        qp.lower_bounds.size() != qp.num_lower() || (qp.num_upper() > 0 && qp.upper_rows.cols() != n) ||
        qp.upper_bounds.size() != qp.num_upper()) {
        throw Error(ErrorKind::InvalidArgument, "quadratic program dimensions are inconsistent");
    }
    const double h_norm = qp.hessian.cwiseAbs().maxCoeff();
    if ((qp.hessian - qp.hessian.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(h_norm, 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "Hessian is not symmetric");
    }
    const MatrixXd h = 0.5 * (qp.hessian + qp.hessian.transpose());
    const auto chol = checked_cholesky(h);

    const Constraints c = unify(qp);
    const double feas_tol = 1e-9 * (1.0 + (c.size() > 0 ? c.bounds.lpNorm<Eigen::Infinity>() : 0.0));
    const int max_iter = options.max_iterations > 0 ? options.max_iterations : 50 * (n + c.size());

    VectorXd x0;
    if (warm != nullptr && warm->x.size() == n && warm->x.allFinite()) {
        x0 = warm->x;
    } else {
        x0 = -chol.solve(qp.linear);
    }
    const VectorXd x_feasible = restore_feasibility(h, c, x0, feas_tol, max_iter);
    auto working = tight_working_set(c, x_feasible, feas_tol);
    ActiveSetResult r = primal_active_set(h, chol, qp.linear, c, x_feasible, std::move(working), max_iter);

    std::vector<std::size_t> order(r.working.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        order[k] = k;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t rr) { return r.working[l] < r.working[rr]; });

    QpSolution sol;
    sol.x = std::move(r.x);
    for (std::size_t k : order) {
        sol.active.push_back(r.working[k]);
        sol.multipliers.push_back(std::max(0.0, r.multipliers[static_cast<Eigen::Index>(k)]));
    }
    sol.iterations = r.iterations;
    sol.objective = qp.objective(sol.x);
    sol.objective_trace = std::move(r.trace);
    return sol;
}

}  // namespace cpspline
