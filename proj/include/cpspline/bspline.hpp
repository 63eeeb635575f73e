/**
 * @file bspline.hpp
 * @brief Uniform cubic B-spline basis, spline evaluation and derivative bounds.
 *
 * Basis functions are indexed 0..n-1. The knot sequence t_0..t_{n+3} is
 * uniform with spacing h = (b - a) / (n - 3), t_3 = a and t_n = b, so the
 * domain [a, b] is covered by the n - 3 interior intervals [t_k, t_{k+1}),
 * k = 3..n-1. Cubic B_j is supported on [t_j, t_{j+4}].
 */
#pragma once

#include <Eigen/Core>

#include <array>
#include <span>
#include <vector>

namespace cpspline {

class KnotGrid {
public:
    /// Uniform grid of basis dimension n on [a, b]. Throws DomainEmpty if
    /// a >= b and BasisTooSmall if n < 7.
    static KnotGrid uniform(double a, double b, int n);

    int dimension() const noexcept { return n_; }
    double lower() const noexcept { return a_; }
    double upper() const noexcept { return b_; }
    double spacing() const noexcept { return h_; }
    int num_intervals() const noexcept { return n_ - 3; }

    /// All n + 4 knots.
    std::span<const double> knots() const noexcept { return knots_; }
    double knot(int k) const { return knots_[static_cast<std::size_t>(k)]; }

    bool contains(double x) const noexcept { return x >= a_ && x <= b_; }

    /// Knot index k in [3, n-1] with t_k <= x < t_{k+1}; x == b maps to n-1.
    /// Throws OutOfDomain when x lies outside [a, b].
    int span_of(double x) const;

    /// Greville abscissa of basis function j, (t_{j+1} + t_{j+2} + t_{j+3}) / 3.
    double greville(int j) const;

    friend bool operator==(const KnotGrid&, const KnotGrid&) = default;

private:
    KnotGrid(double a, double b, int n, std::vector<double> knots);

    double a_ = 0.0;
    double b_ = 1.0;
    int n_ = 0;
    double h_ = 0.0;
    std::vector<double> knots_;
};

inline KnotGrid build_knot_grid(double a, double b, int n) { return KnotGrid::uniform(a, b, n); }

/// Nonzero cubic basis values at a point: B_{first+k}(x) = values[k].
struct LocalBasis {
    int first = 0;
    std::array<double, 4> values{};
};

LocalBasis local_basis(const KnotGrid& grid, double x);

/// Dense row (B_0(x), ..., B_{n-1}(x)).
std::vector<double> basis_row(const KnotGrid& grid, double x);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const noexcept { return hi - lo; }
};

/// Cubic spline s(x) = sum_j a_j B_j(x) on a uniform grid.
class SplineModel {
public:
    SplineModel(KnotGrid grid, Eigen::VectorXd coefficients);

    const KnotGrid& grid() const noexcept { return grid_; }
    const Eigen::VectorXd& coefficients() const noexcept { return coefficients_; }

    double value(double x) const;
    double derivative(double x) const;

    /// Upper bound on |s'| over iv. Since s' = sum_k (a_k - a_{k-1}) / h * N_k
    /// with N_k the quadratic B-splines (nonnegative, summing to one), the
    /// largest |a_k - a_{k-1}| / h over the N_k touching iv bounds |s'| there.
    double lipschitz_bound(const Interval& iv) const;

private:
    KnotGrid grid_;
    Eigen::VectorXd coefficients_;
};

inline double spline_eval(const SplineModel& model, double x) { return model.value(x); }
inline double spline_deriv(const SplineModel& model, double x) { return model.derivative(x); }
inline double lipschitz_bound(const SplineModel& model, const Interval& iv) {
    return model.lipschitz_bound(iv);
}

}  // namespace cpspline
