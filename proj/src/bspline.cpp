#include "cpspline/bspline.hpp"

#include "cpspline/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cpspline {

namespace {

// Nonzero B-splines of the given degree at x in span k (NURBS Book A2.2).
// out[r] holds N_{k-degree+r}(x).
template <int Degree>
std::array<double, Degree + 1> triangular_basis(std::span<const double> t, int k, double x) {
    std::array<double, Degree + 1> out{};
    std::array<double, Degree + 1> left{};
    std::array<double, Degree + 1> right{};
    out[0] = 1.0;
    for (int j = 1; j <= Degree; ++j) {
        left[j] = x - t[static_cast<std::size_t>(k + 1 - j)];
        right[j] = t[static_cast<std::size_t>(k + j)] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = out[r] / (right[r + 1] + left[j - r]);
            out[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        out[j] = saved;
    }
    return out;
}

std::string describe(double x, double a, double b) {
    std::ostringstream os;
    os.precision(17);
    os << "x = " << x << " outside [" << a << ", " << b << "]";
    return os.str();
}

}  // namespace

KnotGrid::KnotGrid(double a, double b, int n, std::vector<double> knots)
    : a_(a), b_(b), n_(n), h_((b - a) / (n - 3)), knots_(std::move(knots)) {}

KnotGrid KnotGrid::uniform(double a, double b, int n) {
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) {
        throw Error(ErrorKind::DomainEmpty, "need a < b");
    }
    if (n < 7) {
        throw Error(ErrorKind::BasisTooSmall, "basis dimension " + std::to_string(n) + " < 7");
    }
    const double h = (b - a) / (n - 3);
    std::vector<double> knots(static_cast<std::size_t>(n + 4));
    for (int k = 0; k < n + 4; ++k) {
        knots[static_cast<std::size_t>(k)] = a + (k - 3) * h;
    }
    knots[3] = a;
    knots[static_cast<std::size_t>(n)] = b;
    return KnotGrid(a, b, n, std::move(knots));
}

int KnotGrid::span_of(double x) const {
    if (!contains(x)) {
        throw Error(ErrorKind::OutOfDomain, describe(x, a_, b_));
    }
    if (x == b_) {
        return n_ - 1;
    }
    int k = 3 + static_cast<int>(std::floor((x - a_) / h_));
    k = std::clamp(k, 3, n_ - 1);
    // Guard the floor against rounding at knot values.
    while (k > 3 && x < knot(k)) {
        --k;
    }
    while (k < n_ - 1 && x >= knot(k + 1)) {
        ++k;
    }
    return k;
}

double KnotGrid::greville(int j) const {
    return (knot(j + 1) + knot(j + 2) + knot(j + 3)) / 3.0;
}

LocalBasis local_basis(const KnotGrid& grid, double x) {
    const int k = grid.span_of(x);
    const auto values = triangular_basis<3>(grid.knots(), k, x);
    LocalBasis out;
    out.first = k - 3;
    for (int r = 0; r < 4; ++r) {
        out.values[static_cast<std::size_t>(r)] = values[static_cast<std::size_t>(r)];
    }
    return out;
}

std::vector<double> basis_row(const KnotGrid& grid, double x) {
    const LocalBasis local = local_basis(grid, x);
    std::vector<double> row(static_cast<std::size_t>(grid.dimension()), 0.0);
    for (int r = 0; r < 4; ++r) {
        row[static_cast<std::size_t>(local.first + r)] = local.values[static_cast<std::size_t>(r)];
    }
    return row;
}

SplineModel::SplineModel(KnotGrid grid, Eigen::VectorXd coefficients)
    : grid_(std::move(grid)), coefficients_(std::move(coefficients)) {
    if (coefficients_.size() != grid_.dimension()) {
        throw Error(ErrorKind::InvalidArgument,
                    "coefficient count " + std::to_string(coefficients_.size()) +
                        " != basis dimension " + std::to_string(grid_.dimension()));
    }
    if (!coefficients_.allFinite()) {
        throw Error(ErrorKind::InvalidArgument, "non-finite spline coefficient");
    }
}

double SplineModel::value(double x) const {
    const LocalBasis local = local_basis(grid_, x);
    double s = 0.0;
    for (int r = 0; r < 4; ++r) {
        s += coefficients_[local.first + r] * local.values[static_cast<std::size_t>(r)];
    }
    return s;
}

double SplineModel::derivative(double x) const {
    const int k = grid_.span_of(x);
    // Quadratic N_i on [t_i, t_{i+3}], i = k-2..k; s' = sum (a_i - a_{i-1}) / h * N_i.
    const auto quad = triangular_basis<2>(grid_.knots(), k, x);
    double d = 0.0;
    for (int r = 0; r < 3; ++r) {
        const int i = k - 2 + r;
        d += (coefficients_[i] - coefficients_[i - 1]) * quad[static_cast<std::size_t>(r)];
    }
    return d / grid_.spacing();
}

double SplineModel::lipschitz_bound(const Interval& iv) const {
    if (!(iv.lo <= iv.hi)) {
        throw Error(ErrorKind::InvalidArgument, "interval with lo > hi");
    }
    const int k_lo = grid_.span_of(iv.lo);
    const int k_hi = grid_.span_of(iv.hi);
    const int n = grid_.dimension();
    const int first = std::max(1, k_lo - 2);
    const int last = std::min(n - 1, k_hi);
    double bound = 0.0;
    for (int i = first; i <= last; ++i) {
        bound = std::max(bound, std::abs(coefficients_[i] - coefficients_[i - 1]));
    }
    return bound / grid_.spacing();
}

}  // namespace cpspline
