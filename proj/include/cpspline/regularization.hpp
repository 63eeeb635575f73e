/**
 * @file regularization.hpp
 * @brief Choice of lambda by the L-curve corner or by GCV on a log grid.
 *
 * Each grid value needs one Cholesky solve of the penalized normal
 * equations; the sweep over the grid is the data-parallel part and runs
 * under OpenMP unless Execution::serial is requested.
 */
#pragma once

#include "cpspline/kernels.hpp"
#include "cpspline/pspline.hpp"

#include <vector>

namespace cpspline {

class LambdaGrid {
public:
    /// `count` log-spaced values from lo to hi inclusive.
    static LambdaGrid logspace(double lo, double hi, int count);
    /// 60 values from 1e-6 to 1e6.
    static LambdaGrid standard() { return logspace(1e-6, 1e6, 60); }
    /// Arbitrary positive values; duplicates allowed, order preserved.
    static LambdaGrid from_values(std::vector<double> values);

    const std::vector<double>& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

private:
    explicit LambdaGrid(std::vector<double> values) : values_(std::move(values)) {}
    std::vector<double> values_;
};

struct LCurvePoint {
    double lambda = 0.0;
    double residual_norm = 0.0;  ///< ||V(Ba - y)||
    double penalty_norm = 0.0;   ///< ||D2 a||
    double log_residual = 0.0;
    double log_penalty = 0.0;
    double curvature = 0.0;      ///< signed Menger curvature; 0 at the ends and on plateaus
    bool ok = false;             ///< false when the fit at this lambda failed
};

struct LCurveResult {
    double lambda = 0.0;
    std::size_t index = 0;
    std::vector<LCurvePoint> curve;
    bool degenerate = false;     ///< penalty norm vanished everywhere
};

struct GcvResult {
    double lambda = 0.0;
    std::size_t index = 0;
    std::vector<double> scores;
    std::vector<double> traces;  ///< trace(S(lambda))
};

/// Signed curvature of the circle through three points; positive when the
/// path turns counter-clockwise (the corner of an L-curve traversed with
/// increasing lambda).
double menger_curvature(double x1, double y1, double x2, double y2, double x3, double y3);

/// Fits a P-spline at every grid value; computes the (residual, penalty)
/// norms and the curvature in log-log coordinates. Points whose solve fails
/// are marked !ok and skipped by the curvature stencil. A point gets zero
/// curvature unless both chords to its neighbours move at least 1% as fast
/// (chord length per unit log lambda) as the fastest chord of the curve.
std::vector<LCurvePoint> lcurve_points(const PenalizedSystem& system, const Dataset& data,
                                       const LambdaGrid& grid, Execution exec = Execution::parallel);

/// Lambda at the largest curvature among interior points, ties toward larger
/// lambda. Throws AllFitsFailed if no solve succeeds.
LCurveResult lcurve_select(const Dataset& data, const KnotGrid& knots, const LambdaGrid& grid,
                           Execution exec = Execution::parallel);
LCurveResult lcurve_select(const PenalizedSystem& system, const Dataset& data, const LambdaGrid& grid,
                           Execution exec = Execution::parallel);

/// GCV(lambda) = m ||(I - S)y||^2 / trace(I - S)^2, S = B(Q + lambda^2 T)^{-1}B'W.
/// Throws TraceDegenerate when trace(I - S) <= 0 at a grid point.
GcvResult gcv_select(const Dataset& data, const KnotGrid& knots, const LambdaGrid& grid,
                     Execution exec = Execution::parallel);
GcvResult gcv_select(const PenalizedSystem& system, const Dataset& data, const LambdaGrid& grid,
                     Execution exec = Execution::parallel);

}  // namespace cpspline
