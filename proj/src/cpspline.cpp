#include "cpspline/cpspline.hpp"

#include "cpspline/error.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <numeric>

namespace cpspline {

namespace {

std::vector<double> values_at(const SplineModel& model, const std::vector<double>& points) {
    std::vector<double> s(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        s[i] = model.value(points[i]);
    }
    return s;
}

// Makes x an active point with forcing eps, inserting it when it is new
// and |Z| is below the cap.
void enforce_at(SamplingState& state, double x, double eps, std::size_t cap) {
    const auto it = std::lower_bound(state.points.begin(), state.points.end(), x);
    const auto i = static_cast<std::size_t>(it - state.points.begin());
    if (it != state.points.end() && *it == x) {
        state.active[i] = 1;
        state.forcing[i] = std::max(state.forcing[i], eps);
        return;
    }
    if (state.size() >= cap) {
        return;
    }
    state.points.insert(it, x);
    state.forcing.insert(state.forcing.begin() + static_cast<std::ptrdiff_t>(i), eps);
    state.active.insert(state.active.begin() + static_cast<std::ptrdiff_t>(i), 1);
}

}  // namespace

bool SamplingState::consistent() const {
    if (forcing.size() != points.size() || active.size() != points.size()) {
        return false;
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(forcing[i] >= 0.0) || active[i] > 1) {
            return false;
        }
        if (i > 0 && !(points[i - 1] < points[i])) {
            return false;
        }
    }
    return true;
}

std::vector<ActiveRun> maximal_active_runs(std::span<const std::uint8_t> active) {
    std::vector<ActiveRun> runs;
    std::size_t i = 0;
    while (i < active.size()) {
        if (!active[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < active.size() && active[j + 1]) {
            ++j;
        }
        runs.push_back(ActiveRun{i, j - i});
        i = j + 1;
    }
    return runs;
}

void FitConfig::validate() const {
    if (mu < 1) {
        throw Error(ErrorKind::InvalidArgument, "mu must be >= 1");
    }
    if (!(epsilon > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "epsilon must be > 0");
    }
    if (!(effective_drop_threshold() >= epsilon)) {
        throw Error(ErrorKind::InvalidArgument, "drop threshold must be >= epsilon");
    }
    if (max_iter < 1) {
        throw Error(ErrorKind::InvalidArgument, "max_iter must be >= 1");
    }
    if (verify_density < 1) {
        throw Error(ErrorKind::InvalidArgument, "verify_density must be >= 1");
    }
    if (lambda && (!(*lambda >= 0.0) || !std::isfinite(*lambda))) {
        throw Error(ErrorKind::InvalidArgument, "lambda must be finite and >= 0");
    }
}

SamplingState init_sampling(const Dataset& data) {
    SamplingState state;
    state.points = data.x;
    std::sort(state.points.begin(), state.points.end());
    state.points.erase(std::unique(state.points.begin(), state.points.end()), state.points.end());
    state.forcing.assign(state.points.size(), 0.0);
    state.active.assign(state.points.size(), 0);
    return state;
}

std::vector<std::uint8_t> detect_activity(const SplineModel& model, const SamplingState& state, double tol_active) {
    std::vector<std::uint8_t> active(state.size(), 0);
    for (std::size_t i = 0; i < state.size(); ++i) {
        active[i] = std::abs(model.value(state.points[i]) - state.forcing[i]) <= tol_active ? 1 : 0;
    }
    return active;
}

SamplingState update_step(const SplineModel& model, const SamplingState& state, const UpdateOptions& options) {
    const std::size_t p = state.size();
    const std::vector<double>& z = state.points;
    const std::vector<double>& eps = state.forcing;
    const auto& act = state.active;

    // Scan positions: the sampling points, flanked by the domain ends as
    // inactive points with zero forcing when they are not sampling points.
    const double a = model.grid().lower();
    const double b = model.grid().upper();
    std::vector<double> zs, es, s, ds;
    std::vector<std::uint8_t> as;
    auto push = [&](double x, double e, std::uint8_t active) {
        zs.push_back(x);
        es.push_back(e);
        as.push_back(active);
        s.push_back(model.value(x));
        ds.push_back(model.derivative(x));
    };
    if (p == 0 || z.front() > a) {
        push(a, 0.0, 0);
    }
    for (std::size_t i = 0; i < p; ++i) {
        push(z[i], eps[i], act[i]);
    }
    if (p == 0 || z.back() < b) {
        push(b, 0.0, 0);
    }

    struct Candidate {
        double point;
        double magnitude;
    };
    std::vector<Candidate> inserted;
    auto consider = [&](double zbar, std::size_t i) {
        if (std::isfinite(zbar) && zbar > zs[i] && zbar < zs[i + 1]) {
            inserted.push_back({zbar, std::abs(model.value(zbar))});
        }
    };
    for (std::size_t i = 0; i + 1 < zs.size(); ++i) {
        if (as[i] && as[i + 1]) {
            if (ds[i] < 0.0 && ds[i + 1] > 0.0) {
                consider(0.5 * (zs[i] + zs[i + 1]), i);
            }
        } else if (s[i] > s[i + 1] && !as[i] && s[i] > es[i]) {
            if (ds[i] != 0.0) {
                consider(zs[i] - s[i] / ds[i], i);
            }
        } else if (s[i] < s[i + 1] && !as[i + 1] && s[i + 1] > es[i + 1]) {
            if (ds[i + 1] != 0.0) {
                consider(zs[i + 1] - s[i + 1] / ds[i + 1], i);
            }
        }
    }

    if (options.z_cap && p + inserted.size() > *options.z_cap) {
        const std::size_t room = *options.z_cap > p ? *options.z_cap - p : 0;
        std::stable_sort(inserted.begin(), inserted.end(),
                         [](const Candidate& l, const Candidate& r) { return l.magnitude < r.magnitude; });
        inserted.resize(room);
    }
    if (inserted.empty()) {
        return state;
    }

    std::sort(inserted.begin(), inserted.end(), [](const Candidate& l, const Candidate& r) { return l.point < r.point; });
    SamplingState out;
    out.points.reserve(p + inserted.size());
    std::size_t k = 0;
    auto flush_before = [&](double limit) {
        for (; k < inserted.size() && inserted[k].point < limit; ++k) {
            out.points.push_back(inserted[k].point);
            out.forcing.push_back(options.epsilon);
            out.active.push_back(1);
        }
    };
    for (std::size_t i = 0; i < p; ++i) {
        flush_before(z[i]);
        out.points.push_back(z[i]);
        out.forcing.push_back(eps[i]);
        out.active.push_back(act[i]);
    }
    flush_before(std::numeric_limits<double>::infinity());
    return out;
}

SamplingState prune_step(const SplineModel& model, const SamplingState& state, const FitConfig& cfg) {
    const double drop = cfg.effective_drop_threshold();
    const auto mu = static_cast<std::size_t>(cfg.mu);
    // Runs come from the incoming state: an inactive point delimits a run
    // even when the drop phase removes it.
    const auto runs = maximal_active_runs(state.active);

    // Active points and the inactive flanks of every run survive the drop:
    // the flanks delimit the run, and an active point sits on its own bound.
    std::vector<std::uint8_t> protect(state.size(), 0);
    for (const ActiveRun& run : runs) {
        for (std::size_t i = run.first; i <= run.last(); ++i) {
            protect[i] = 1;
        }
        if (run.first > 0) {
            protect[run.first - 1] = 1;
        }
        if (run.last() + 1 < state.size()) {
            protect[run.last() + 1] = 1;
        }
    }

    SamplingState out;
    auto keep = [&](std::size_t i) {
        if (!protect[i] && model.value(state.points[i]) > drop) {
            return;
        }
        out.points.push_back(state.points[i]);
        out.forcing.push_back(state.forcing[i]);
        out.active.push_back(state.active[i]);
    };
    std::size_t i = 0;
    for (const ActiveRun& run : runs) {
        if (run.extent <= mu) {
            continue;
        }
        for (; i < run.first; ++i) {
            keep(i);
        }
        const double lo = state.points[run.first];
        const double hi = state.points[run.last()];
        const double step = (hi - lo) / static_cast<double>(mu);
        for (std::size_t k = 1; k <= mu; ++k) {
            out.points.push_back(k == mu ? hi : lo + static_cast<double>(k) * step);
            out.forcing.push_back(cfg.epsilon);
            out.active.push_back(1);
        }
        i = run.last() + 1;
    }
    for (; i < state.size(); ++i) {
        keep(i);
    }
    return out;
}

std::vector<double> update_forcing(const SplineModel& model, const SamplingState& state, const FitConfig& cfg) {
    std::vector<double> eps = state.forcing;
    const auto runs = maximal_active_runs(state.active);
    if (runs.empty()) {
        return eps;
    }
    const std::vector<double> s = values_at(model, state.points);
    const std::size_t p = state.size();
    for (const ActiveRun& run : runs) {
        const double left = run.first > 0 ? s[run.first - 1] : model.value(model.grid().lower());
        const double right = run.last() + 1 < p ? s[run.last() + 1] : model.value(model.grid().upper());
        const std::size_t q = run.extent;
        for (std::size_t i = 0; i <= q; ++i) {
            const double steps = left > right ? static_cast<double>(i + 1) : static_cast<double>(q - i + 1);
            eps[run.first + i] = steps * cfg.epsilon;
        }
    }
    return eps;
}

std::vector<CertifiedInterval> certify_positivity(const SplineModel& model, const SamplingState& state) {
    const std::size_t p = state.size();
    if (p == 0) {
        throw Error(ErrorKind::InvalidArgument, "certificate needs at least one sampling point");
    }
    const double a = model.grid().lower();
    const double b = model.grid().upper();
    const std::vector<double> s = values_at(model, state.points);

    std::vector<CertifiedInterval> out;
    out.reserve(p + 1);
    for (std::size_t i = 0; i <= p; ++i) {
        CertifiedInterval ci;
        ci.interval.lo = i == 0 ? a : state.points[i - 1];
        ci.interval.hi = i == p ? b : state.points[i];
        double attained = 0.0;
        if (i == 0) {
            ci.forcing_bound = state.forcing[0];
            attained = s[0];
        } else if (i == p) {
            ci.forcing_bound = state.forcing[p - 1];
            attained = s[p - 1];
        } else {
            ci.forcing_bound = std::max(state.forcing[i - 1], state.forcing[i]);
            attained = std::max(s[i - 1], s[i]);
        }
        ci.width = ci.interval.width();
        ci.lipschitz = model.lipschitz_bound(ci.interval);
        // The bound s >= eps_bar - L h relies on s(z_i) >= eps_i, which the
        // solver meets only to rounding; the attained value keeps it sound.
        ci.certified = std::min(ci.forcing_bound, attained) > ci.lipschitz * ci.width;
        out.push_back(ci);
    }
    return out;
}

GridMinimum min_on_grid(const SplineModel& model, int density, Execution exec) {
    const std::vector<double> xs = kernels::uniform_points(model.grid(), density);
    const std::vector<double> values = kernels::evaluate(model, xs, exec);
    const auto [index, value] = kernels::argmin(values);
    return GridMinimum{value, xs[index]};
}

GridMinimum spline_minimum(const SplineModel& model) {
    const KnotGrid& grid = model.grid();
    GridMinimum best{model.value(grid.lower()), grid.lower()};
    auto visit = [&](double x) {
        const double v = model.value(x);
        if (v < best.value) {
            best = GridMinimum{v, x};
        }
    };
    for (int k = 3; k < grid.dimension(); ++k) {
        const double lo = grid.knot(k);
        const double hi = k + 1 == grid.dimension() ? grid.upper() : grid.knot(k + 1);
        const double width = hi - lo;
        visit(hi);
        // s'(lo + u width) = c0 + c1 u + c2 u^2 through u = 0, 1/2, 1.
        const double d0 = model.derivative(lo);
        const double dm = model.derivative(lo + 0.5 * width);
        const double d1 = model.derivative(hi);
        const double c0 = d0;
        const double c2 = 2.0 * (d0 - 2.0 * dm + d1);
        const double c1 = d1 - d0 - c2;
        const double scale = std::max({std::abs(c0), std::abs(c1), std::abs(c2)});
        if (scale == 0.0) {
            continue;
        }
        double roots[2];
        int count = 0;
        if (std::abs(c2) <= 1e-14 * scale) {
            if (c1 != 0.0) {
                roots[count++] = -c0 / c1;
            }
        } else {
            const double disc = c1 * c1 - 4.0 * c2 * c0;
            if (disc >= 0.0) {
                const double q = -0.5 * (c1 + std::copysign(std::sqrt(disc), c1));
                if (q != 0.0) {
                    roots[count++] = q / c2;
                    roots[count++] = c0 / q;
                } else {
                    roots[count++] = 0.0;
                }
            }
        }
        for (int r = 0; r < count; ++r) {
            if (roots[r] > 0.0 && roots[r] < 1.0) {
                visit(lo + roots[r] * width);
            }
        }
    }
    return best;
}

LambdaChoice choose_lambda(const PenalizedSystem& system, const Dataset& data, const FitConfig& cfg) {
    if (cfg.lambda) {
        return LambdaChoice{*cfg.lambda, false};
    }
    if (cfg.selector == LambdaSelector::gcv) {
        return LambdaChoice{gcv_select(system, data, cfg.lambda_grid, cfg.exec).lambda, false};
    }
    const LCurveResult lc = lcurve_select(system, data, cfg.lambda_grid, cfg.exec);
    return LambdaChoice{lc.lambda, lc.degenerate};
}

CpSplineFit fit_cpspline(const Dataset& data, const KnotGrid& grid, const FitConfig& cfg) {
    const auto started = std::chrono::steady_clock::now();
    cfg.validate();
    data.validate(grid);

    const PenalizedSystem system(assemble(data, grid, cfg.exec), grid);
    const LambdaChoice choice = choose_lambda(system, data, cfg);

    double y_scale = 0.0;
    for (double v : data.y) {
        y_scale = std::max(y_scale, std::abs(v));
    }
    const double tol_active = cfg.tol_active.value_or(1e-9 * (1.0 + y_scale));
    const std::size_t z_cap = cfg.z_cap.value_or(2 * data.size());
    const UpdateOptions update_options{cfg.epsilon, z_cap};

    SamplingState state = init_sampling(data);
    std::optional<QpSolution> warm;
    std::optional<SplineModel> model;
    FitReport report;
    report.lambda_used = choice.lambda;
    report.lambda_degenerate = choice.degenerate;

    for (int iter = 1; iter <= cfg.max_iter; ++iter) {
        ConstraintSet cs;
        cs.lower.reserve(state.size());
        for (std::size_t i = 0; i < state.size(); ++i) {
            cs.lower.push_back(Bound{state.points[i], state.forcing[i]});
        }
        cs.upper = cfg.upper;

        ConstrainedFit fit = fit_constrained(system, choice.lambda, cs, warm ? &*warm : nullptr);
        state.active = detect_activity(fit.model, state, tol_active);
        report.iterations = iter;
        report.z_history.push_back(state.size());
        report.qp_iterations += fit.qp.iterations;

        if (cfg.observer) {
            IterationRecord record;
            record.iteration = iter;
            record.system = &system;
            record.lambda = choice.lambda;
            record.constraints = &cs;
            record.warm_start = warm ? &*warm : nullptr;
            record.solution = &fit.qp;
            record.model = &fit.model;
            record.state = &state;
            cfg.observer(record);
        }

        const GridMinimum gm = min_on_grid(fit.model, cfg.verify_density, cfg.exec);
        model = std::move(fit.model);
        warm = std::move(fit.qp);
        const GridMinimum exact = spline_minimum(*model);
        report.min_on_grid = gm.value;
        report.argmin_on_grid = gm.location;
        report.minimum = exact.value;
        report.argminimum = exact.location;
        if (gm.value >= 0.0 && exact.value >= 0.0) {
            report.converged = true;
            break;
        }
        if (iter == cfg.max_iter) {
            break;
        }

        SamplingState next = update_step(*model, state, update_options);
        next = prune_step(*model, next, cfg);
        next.forcing = update_forcing(*model, next, cfg);
        if (exact.value < 0.0) {
            // The dip search works from the sampling points only; the
            // exact minimiser is always a valid target.
            enforce_at(next, exact.location, cfg.epsilon, z_cap);
        }
        if (next == state) {
            report.fixed_point = true;
            break;
        }
        state = std::move(next);
    }

    report.rmse = rmse(*model, data);
    if (!state.empty()) {
        report.certificate = certify_positivity(*model, state);
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return CpSplineFit{std::move(*model), std::move(state), std::move(report)};
}

}  // namespace cpspline
