/**
 * @file cpspline.hpp
 * @brief Constrained P-splines with adaptively chosen sampling points.
 *
 * The fit repeatedly solves the P-spline problem under s(z_i) >= eps_i at
 * the sampling points Z, then
 *
 *  1. inserts points where the spline is likely to dip below zero
 *     (update_step),
 *  2. drops points far above the bound and thins long runs of active points
 *     (prune_step),
 *  3. re-ramps the forcing values eps_i inside each run of active points
 *     (update_forcing),
 *
 * until the spline is nonnegative on a verification grid, the sampling state
 * stops changing, or the iteration cap is hit. Every solve after the first
 * warm-starts from the previous QP solution.
 */
#pragma once

#include "cpspline/bspline.hpp"
#include "cpspline/kernels.hpp"
#include "cpspline/pspline.hpp"
#include "cpspline/qp.hpp"
#include "cpspline/regularization.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace cpspline {

/// Sampling points Z, forcing values E and activity flags A.
struct SamplingState {
    std::vector<double> points;
    std::vector<double> forcing;
    std::vector<std::uint8_t> active;

    std::size_t size() const noexcept { return points.size(); }
    bool empty() const noexcept { return points.empty(); }

    /// Lengths equal, points strictly increasing, forcing >= 0.
    bool consistent() const;

    friend bool operator==(const SamplingState&, const SamplingState&) = default;
};

/// Maximal run of active points: indices first..first+extent.
struct ActiveRun {
    std::size_t first = 0;
    std::size_t extent = 0;

    std::size_t last() const noexcept { return first + extent; }
    friend bool operator==(const ActiveRun&, const ActiveRun&) = default;
};

std::vector<ActiveRun> maximal_active_runs(std::span<const std::uint8_t> active);

enum class LambdaSelector { lcurve, gcv };

struct FitConfig;

/// Snapshot handed to FitConfig::observer after every constrained solve.
struct IterationRecord {
    int iteration = 0;
    const PenalizedSystem* system = nullptr;
    double lambda = 0.0;
    const ConstraintSet* constraints = nullptr;
    const QpSolution* warm_start = nullptr;  ///< null on the first iteration
    const QpSolution* solution = nullptr;
    const SplineModel* model = nullptr;
    const SamplingState* state = nullptr;
};

struct FitConfig {
    std::optional<double> lambda;                  ///< nullopt selects lambda automatically
    LambdaSelector selector = LambdaSelector::lcurve;
    LambdaGrid lambda_grid = LambdaGrid::standard();
    int mu = 5;                                    ///< longest active run kept by prune_step
    double epsilon = 1e-8;                         ///< forcing increment
    std::optional<double> drop_threshold;          ///< default mu * epsilon
    std::optional<double> tol_active;              ///< default 1e-9 (1 + max|y|)
    int max_iter = 20;
    std::optional<std::size_t> z_cap;              ///< default 2m
    int verify_density = 20;                       ///< verification points per knot interval
    std::uint64_t seed = 0;                        ///< echoed into reports
    std::vector<Bound> upper;                      ///< static upper bounds
    Execution exec = Execution::parallel;
    std::function<void(const IterationRecord&)> observer;

    double effective_drop_threshold() const { return drop_threshold.value_or(mu * epsilon); }
    /// Throws InvalidArgument when mu < 1, epsilon <= 0, drop threshold < epsilon or max_iter < 1.
    void validate() const;
};

struct CertifiedInterval {
    Interval interval;
    bool certified = false;
    double forcing_bound = 0.0;  ///< the max of adjacent forcing values
    double lipschitz = 0.0;
    double width = 0.0;
};

struct FitReport {
    int iterations = 0;
    double lambda_used = 0.0;
    bool lambda_degenerate = false;  ///< L-curve penalty vanished (data linear)
    double rmse = 0.0;
    double min_on_grid = 0.0;
    double argmin_on_grid = 0.0;
    double minimum = 0.0;            ///< exact minimum over [a, b]
    double argminimum = 0.0;
    bool converged = false;          ///< grid and exact minimum both >= 0
    bool fixed_point = false;
    std::vector<CertifiedInterval> certificate;
    std::vector<std::size_t> z_history;  ///< |Z| used by each solve
    int qp_iterations = 0;
    double seconds = 0.0;
};

struct CpSplineFit {
    SplineModel model;
    SamplingState state;
    FitReport report;
};

/// Z = sorted distinct data sites, E = 0, A = 0.
SamplingState init_sampling(const Dataset& data);

/// A_i = 1 iff |s(z_i) - eps_i| <= tol_active.
std::vector<std::uint8_t> detect_activity(const SplineModel& model, const SamplingState& state, double tol_active);

struct UpdateOptions {
    double epsilon = 1e-8;             ///< forcing value of inserted points
    std::optional<std::size_t> z_cap;  ///< limit on |Z| after insertion
};

/// Inserts the midpoint of an all-active interval where s turns upward, or
/// the root of the first-order Taylor expansion from the higher endpoint
/// when it falls inside the interval. New points are marked active. The end
/// intervals [a, z_1] and [z_p, b] are scanned too, with a and b acting as
/// inactive points of zero forcing.
SamplingState update_step(const SplineModel& model, const SamplingState& state, const UpdateOptions& options = {});

/// Drops points with s(z_i) above the drop threshold, then replaces every
/// run of active points with extent > mu by mu evenly spaced active points.
SamplingState prune_step(const SplineModel& model, const SamplingState& state, const FitConfig& cfg);

/// Ramps eps over each maximal active run: eps, 2eps, ... when the left
/// neighbour is higher than the right one, the reverse ramp otherwise.
std::vector<double> update_forcing(const SplineModel& model, const SamplingState& state, const FitConfig& cfg);

/// Per-interval positivity certificate over a = z_0 < z_1 < ... < z_{p+1} = b.
std::vector<CertifiedInterval> certify_positivity(const SplineModel& model, const SamplingState& state);

struct GridMinimum {
    double value = 0.0;
    double location = 0.0;
};

/// Minimum of s over `density` uniform points per knot interval, ends included.
GridMinimum min_on_grid(const SplineModel& model, int density, Execution exec = Execution::parallel);

/// Exact minimum of s over [a, b]: on each knot interval s' is quadratic, so
/// the candidates are the interval ends and the roots of s' inside.
GridMinimum spline_minimum(const SplineModel& model);

/// Lambda from the configured selector on the unconstrained problem.
struct LambdaChoice {
    double lambda = 0.0;
    bool degenerate = false;
};
LambdaChoice choose_lambda(const PenalizedSystem& system, const Dataset& data, const FitConfig& cfg);

CpSplineFit fit_cpspline(const Dataset& data, const KnotGrid& grid, const FitConfig& cfg);

}  // namespace cpspline
