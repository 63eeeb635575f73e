#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cpspline/error.hpp"
#include "cpspline/kernels.hpp"
#include "oracles.hpp"

#include <omp.h>

#include <random>

using namespace cpspline;

namespace {

SplineModel random_model(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> nd;
    Eigen::VectorXd c(n);
    for (int j = 0; j < n; ++j) {
        c[j] = nd(rng);
    }
    return SplineModel(KnotGrid::uniform(-2.0, 3.0, n), c);
}

}  // namespace

TEST_CASE("linspace and uniform points") {
    const auto xs = kernels::linspace(1.0, 2.0, 5);
    CHECK(xs == std::vector<double>{1.0, 1.25, 1.5, 1.75, 2.0});
    CHECK_THROWS_AS(kernels::linspace(0.0, 1.0, 1), Error);

    const KnotGrid g = KnotGrid::uniform(0.0, 1.0, 7);
    const auto up = kernels::uniform_points(g, 2);
    REQUIRE(up.size() == 9);
    CHECK(up.front() == 0.0);
    CHECK(up[1] == 0.125);
    CHECK(up.back() == 1.0);
    CHECK_THROWS_AS(kernels::uniform_points(g, 0), Error);
}

TEST_CASE("argmin takes the first occurrence") {
    const std::vector<double> v = {3.0, -1.0, 2.0, -1.0};
    const auto [i, m] = kernels::argmin(v);
    CHECK(i == 1);
    CHECK(m == -1.0);
}

TEST_CASE("evaluate: serial reference, parallel path and oracle") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-2.0, 3.0);
    const SplineModel s = random_model(rng, 25);
    std::vector<double> xs(20001);
    for (double& x : xs) {
        x = u(rng);
    }
    xs[0] = 3.0;
    const auto serial = kernels::evaluate(s, xs, Execution::serial);
    for (int threads : {1, 2, 3, 8}) {
        omp_set_num_threads(threads);
        CHECK(kernels::evaluate(s, xs, Execution::parallel) == serial);
    }
    for (std::size_t i = 0; i < xs.size(); i += 997) {
        CHECK(serial[i] == doctest::Approx(oracle::spline_value(-2.0, 3.0, s.coefficients(), xs[i])).epsilon(1e-12));
    }
    std::vector<double> wrong(3);
    CHECK_THROWS_AS(kernels::evaluate(s, xs, wrong, Execution::serial), Error);
}

TEST_CASE("normal accumulation: serial reference, parallel path and dense oracle") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-2.0, 3.0);
    std::uniform_real_distribution<double> wu(0.5, 2.0);
    const int n = 30;
    const KnotGrid g = KnotGrid::uniform(-2.0, 3.0, n);
    std::vector<double> xs(5000), ys(5000), ws(5000);
    std::vector<LocalBasis> rows;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = u(rng);
        ys[i] = std::sin(xs[i]) + u(rng);
        ws[i] = wu(rng);
        rows.push_back(local_basis(g, xs[i]));
    }
    const auto serial = kernels::accumulate_normal(rows, ys, ws, n, Execution::serial);
    // the parallel path sums each entry bucket by bucket: identical for any
    // thread count, equal to the data-order serial sums up to rounding
    omp_set_num_threads(1);
    const auto one = kernels::accumulate_normal(rows, ys, ws, n, Execution::parallel);
    for (int threads : {2, 3, 5}) {
        omp_set_num_threads(threads);
        const auto par = kernels::accumulate_normal(rows, ys, ws, n, Execution::parallel);
        CHECK(par.gram == one.gram);
        CHECK(par.rhs == one.rhs);
    }
    CHECK((one.gram - serial.gram).cwiseAbs().maxCoeff() < 1e-12 * serial.gram.cwiseAbs().maxCoeff());
    CHECK((one.rhs - serial.rhs).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + serial.rhs.cwiseAbs().maxCoeff()));
    const Eigen::MatrixXd B = oracle::dense_basis(-2.0, 3.0, n, xs);
    const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(ws.data(), 5000);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(ys.data(), 5000);
    const Eigen::MatrixXd gram = B.transpose() * w.asDiagonal() * B;
    CHECK((serial.gram - gram).cwiseAbs().maxCoeff() < 1e-10 * gram.cwiseAbs().maxCoeff());
    CHECK((serial.gram - serial.gram.transpose()).cwiseAbs().maxCoeff() < 1e-14 * gram.cwiseAbs().maxCoeff());
    const Eigen::VectorXd rhs = B.transpose() * w.asDiagonal() * y;
    CHECK((serial.rhs - rhs).cwiseAbs().maxCoeff() < 1e-10 * (1.0 + rhs.cwiseAbs().maxCoeff()));
}
