#include "cpspline/regularization.hpp"

#include "cpspline/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cpspline {

using Eigen::VectorXd;

LambdaGrid LambdaGrid::logspace(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi >= lo) || count < 1) {
        throw Error(ErrorKind::InvalidArgument, "lambda grid needs 0 < lo <= hi and count >= 1");
    }
    std::vector<double> values(static_cast<std::size_t>(count));
    if (count == 1) {
        values[0] = lo;
        return LambdaGrid(std::move(values));
    }
    const double llo = std::log10(lo);
    const double step = (std::log10(hi) - llo) / (count - 1);
    for (int i = 0; i < count; ++i) {
        values[static_cast<std::size_t>(i)] = std::pow(10.0, llo + i * step);
    }
    values.front() = lo;
    values.back() = hi;
    return LambdaGrid(std::move(values));
}

LambdaGrid LambdaGrid::from_values(std::vector<double> values) {
    if (values.empty()) {
        throw Error(ErrorKind::InvalidArgument, "lambda grid is empty");
    }
    for (double v : values) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw Error(ErrorKind::InvalidArgument, "lambda values must be positive and finite");
        }
    }
    return LambdaGrid(std::move(values));
}

double menger_curvature(double x1, double y1, double x2, double y2, double x3, double y3) {
    const double ax = x2 - x1, ay = y2 - y1;
    const double bx = x3 - x2, by = y3 - y2;
    const double cx = x3 - x1, cy = y3 - y1;
    const double denom = std::hypot(ax, ay) * std::hypot(bx, by) * std::hypot(cx, cy);
    if (!(denom > 0.0) || !std::isfinite(denom)) {
        return 0.0;
    }
    return 2.0 * (ax * by - ay * bx) / denom;
}

namespace {

constexpr double kLogFloor = 1e-300;
constexpr double kResolvedFraction = 1e-2;

double fitted_residual(const DesignMatrices& dm, const Dataset& data, const VectorXd& a, bool weighted) {
    double sum = 0.0;
    for (std::size_t i = 0; i < dm.rows.size(); ++i) {
        const LocalBasis& row = dm.rows[i];
        double s = 0.0;
        for (int r = 0; r < 4; ++r) {
            s += row.values[static_cast<std::size_t>(r)] * a[row.first + r];
        }
        const double res = data.y[i] - s;
        sum += (weighted ? data.weight(i) : 1.0) * res * res;
    }
    return sum;
}

// Runs body(i) for every grid index, serially or under OpenMP.
template <typename Body>
void for_each_lambda(std::size_t count, Execution exec, Body&& body) {
    const auto total = static_cast<std::ptrdiff_t>(count);
    if (exec == Execution::serial) {
        for (std::ptrdiff_t i = 0; i < total; ++i) {
            body(static_cast<std::size_t>(i));
        }
        return;
    }
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < total; ++i) {
        body(static_cast<std::size_t>(i));
    }
}

}  // namespace

std::vector<LCurvePoint> lcurve_points(const PenalizedSystem& system, const Dataset& data, const LambdaGrid& grid,
                                       Execution exec) {
    std::vector<LCurvePoint> curve(grid.size());
    const DesignMatrices& dm = system.design();
    for_each_lambda(grid.size(), exec, [&](std::size_t i) {
        LCurvePoint& pt = curve[i];
        pt.lambda = grid[i];
        try {
            const VectorXd a = system.to_coefficients(system.solve(pt.lambda));
            pt.residual_norm = std::sqrt(fitted_residual(dm, data, a, true));
            pt.penalty_norm = penalty_norm(a);
            pt.log_residual = std::log(std::max(pt.residual_norm, kLogFloor));
            pt.log_penalty = std::log(std::max(pt.penalty_norm, kLogFloor));
            pt.ok = std::isfinite(pt.residual_norm) && std::isfinite(pt.penalty_norm);
        } catch (const Error&) {
            pt.ok = false;
        }
    });

    std::vector<std::size_t> ok;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (curve[i].ok) {
            ok.push_back(i);
        }
    }
    if (ok.size() < 3) {
        return curve;
    }

    // Chord length per unit of log(lambda). On the plateaus at either end the
    // points coincide up to rounding and their curvature is noise.
    std::vector<double> speed(ok.size() - 1, 0.0);
    double max_speed = 0.0;
    for (std::size_t k = 0; k + 1 < ok.size(); ++k) {
        const LCurvePoint& p1 = curve[ok[k]];
        const LCurvePoint& p2 = curve[ok[k + 1]];
        const double dt = std::abs(std::log(p2.lambda) - std::log(p1.lambda));
        const double chord = std::hypot(p2.log_residual - p1.log_residual, p2.log_penalty - p1.log_penalty);
        speed[k] = dt > 0.0 ? chord / dt : 0.0;
        max_speed = std::max(max_speed, speed[k]);
    }
    const double min_speed = kResolvedFraction * max_speed;
    for (std::size_t k = 1; k + 1 < ok.size(); ++k) {
        if (!(speed[k - 1] >= min_speed && speed[k] >= min_speed && max_speed > 0.0)) {
            continue;
        }
        const LCurvePoint& p1 = curve[ok[k - 1]];
        const LCurvePoint& p3 = curve[ok[k + 1]];
        LCurvePoint& p2 = curve[ok[k]];
        p2.curvature = menger_curvature(p1.log_residual, p1.log_penalty, p2.log_residual, p2.log_penalty,
                                        p3.log_residual, p3.log_penalty);
    }
    return curve;
}

LCurveResult lcurve_select(const PenalizedSystem& system, const Dataset& data, const LambdaGrid& grid,
                           Execution exec) {
    LCurveResult out;
    out.curve = lcurve_points(system, data, grid, exec);

    std::vector<std::size_t> ok;
    for (std::size_t i = 0; i < out.curve.size(); ++i) {
        if (out.curve[i].ok) {
            ok.push_back(i);
        }
    }
    if (ok.empty()) {
        throw Error(ErrorKind::AllFitsFailed, "no lambda in the grid produced a solvable system");
    }

    double y_scale = 0.0;
    for (double v : data.y) {
        y_scale = std::max(y_scale, std::abs(v));
    }
    double max_penalty = 0.0;
    for (std::size_t i : ok) {
        max_penalty = std::max(max_penalty, out.curve[i].penalty_norm);
    }
    if (max_penalty <= 1e-10 * (1.0 + y_scale)) {
        out.degenerate = true;
        out.index = ok.front();
        for (std::size_t i : ok) {
            if (out.curve[i].lambda >= out.curve[out.index].lambda) {
                out.index = i;
            }
        }
        out.lambda = out.curve[out.index].lambda;
        return out;
    }

    if (ok.size() < 3) {
        out.index = ok[ok.size() / 2];
        out.lambda = out.curve[out.index].lambda;
        return out;
    }

    std::size_t best = ok[1];
    for (std::size_t k = 1; k + 1 < ok.size(); ++k) {
        const LCurvePoint& p = out.curve[ok[k]];
        const LCurvePoint& b = out.curve[best];
        if (p.curvature > b.curvature || (p.curvature == b.curvature && p.lambda > b.lambda)) {
            best = ok[k];
        }
    }
    out.index = best;
    out.lambda = out.curve[best].lambda;
    return out;
}

LCurveResult lcurve_select(const Dataset& data, const KnotGrid& knots, const LambdaGrid& grid, Execution exec) {
    const PenalizedSystem system(assemble(data, knots, exec), knots);
    return lcurve_select(system, data, grid, exec);
}

GcvResult gcv_select(const PenalizedSystem& system, const Dataset& data, const LambdaGrid& grid, Execution exec) {
    GcvResult out;
    out.scores.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
    out.traces.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<char> failed(grid.size(), 0);
    const DesignMatrices& dm = system.design();
    const double m = static_cast<double>(data.size());

    for_each_lambda(grid.size(), exec, [&](std::size_t i) {
        try {
            const auto chol = checked_cholesky(system.hessian(grid[i]));
            const VectorXd a = system.to_coefficients(chol.solve(system.rhs()));
            const double trace = chol.solve(system.gram()).trace();
            const double rss = fitted_residual(dm, data, a, false);
            out.traces[i] = trace;
            out.scores[i] = m * rss / ((m - trace) * (m - trace));
            if (!(m - trace > 0.0)) {
                failed[i] = 2;
            }
        } catch (const Error&) {
            failed[i] = 1;
        }
    });

    bool any = false;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (failed[i] == 2) {
            throw Error(ErrorKind::TraceDegenerate,
                        "trace(I - S) <= 0 at lambda = " + std::to_string(grid[i]));
        }
        if (failed[i] != 0) {
            continue;
        }
        if (!any || out.scores[i] < out.scores[out.index] ||
            (out.scores[i] == out.scores[out.index] && grid[i] > grid[out.index])) {
            out.index = i;
            any = true;
        }
    }
    if (!any) {
        throw Error(ErrorKind::AllFitsFailed, "no lambda in the grid produced a solvable system");
    }
    out.lambda = grid[out.index];
    return out;
}

GcvResult gcv_select(const Dataset& data, const KnotGrid& knots, const LambdaGrid& grid, Execution exec) {
    const PenalizedSystem system(assemble(data, knots, exec), knots);
    return gcv_select(system, data, grid, exec);
}

}  // namespace cpspline
