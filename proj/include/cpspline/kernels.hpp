/**
 * @file kernels.hpp
 * @brief Data-parallel inner loops, each with a serial reference path.
 *
 * Every kernel takes an Execution argument. Execution::serial is the plain
 * reference loop the tests compare against; Execution::parallel runs the
 * same work under OpenMP. Parallel results do not depend on the thread
 * count: work is split so that every output element is reduced in a fixed
 * order.
 */
#pragma once

#include "cpspline/bspline.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace cpspline {

enum class Execution { serial, parallel };

namespace kernels {

/// out[i] = s(xs[i]).
void evaluate(const SplineModel& model, std::span<const double> xs, std::span<double> out, Execution exec);
std::vector<double> evaluate(const SplineModel& model, std::span<const double> xs, Execution exec);

/// `per_interval` uniform points in each knot interval of [a, b], plus b.
std::vector<double> uniform_points(const KnotGrid& grid, int per_interval);

/// `count` uniform points from a to b inclusive (count >= 2).
std::vector<double> linspace(double a, double b, int count);

struct NormalAccumulation {
    Eigen::MatrixXd gram;  ///< B'WB
    Eigen::VectorXd rhs;   ///< B'Wy
};

/// Accumulates B'WB and B'Wy from the compact basis rows. The parallel
/// path buckets rows by their first nonzero column and assigns each output
/// row of B'WB to one thread.
NormalAccumulation accumulate_normal(std::span<const LocalBasis> rows, std::span<const double> y,
                                     std::span<const double> w, int n, Execution exec);

/// Index and value of the minimum of `values` (first occurrence).
std::pair<std::size_t, double> argmin(std::span<const double> values);

}  // namespace kernels
}  // namespace cpspline
