#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cpspline/error.hpp"
#include "cpspline/pspline.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace cpspline;

namespace {

Dataset noisy(std::mt19937_64& rng, double a, double b, int m, double sigma, double (*f)(double)) {
    std::uniform_real_distribution<double> u(a, b);
    std::normal_distribution<double> nd(0.0, sigma);
    Dataset d;
    for (int i = 0; i < m; ++i) {
        const double x = u(rng);
        d.x.push_back(x);
        d.y.push_back(f(x) + nd(rng));
    }
    return d;
}

double wave(double x) { return std::sin(x) + 0.2 * x; }

double max_abs_diff(const SplineModel& s, const SplineModel& t) {
    return (s.coefficients() - t.coefficients()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("penalty matrix for n = 4") {
    Eigen::MatrixXd expected(4, 4);
    expected << 1, -2, 1, 0, -2, 5, -4, 1, 1, -4, 5, -2, 0, 1, -2, 1;
    CHECK((penalty_matrix(4) - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("penalty matrix equals D2'D2 with a two dimensional null space") {
    for (int n : {7, 12, 30}) {
        const Eigen::MatrixXd T = penalty_matrix(n);
        const Eigen::MatrixXd D = oracle::d2(n);
        CHECK((T - D.transpose() * D).cwiseAbs().maxCoeff() == 0.0);
        CHECK((second_difference(n) - D).cwiseAbs().maxCoeff() == 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        int zero = 0;
        for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
            CHECK(es.eigenvalues()[k] > -1e-12);
            zero += es.eigenvalues()[k] < 1e-10;
        }
        CHECK(zero == 2);
    }
}

TEST_CASE("assembled matrices") {
    std::mt19937_64 rng(1);
    Dataset d = noisy(rng, 0.0, 4.0, 40, 0.1, wave);
    d.w.assign(40, 1.0);
    for (std::size_t i = 0; i < 40; i += 3) {
        d.w[i] = 2.5;
    }
    const KnotGrid g = KnotGrid::uniform(0.0, 4.0, 11);
    const DesignMatrices dm = assemble(d, g);
    const Eigen::MatrixXd B = oracle::dense_basis(0.0, 4.0, 11, d.x);
    const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(d.w.data(), 40);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(d.y.data(), 40);
    CHECK((dm.dense_basis() - B).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((dm.gram - B.transpose() * w.asDiagonal() * B).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((dm.rhs - B.transpose() * w.asDiagonal() * y).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((dm.penalty - penalty_matrix(11)).cwiseAbs().maxCoeff() == 0.0);
    for (Eigen::Index i = 0; i < B.rows(); ++i) {
        CHECK(B.row(i).sum() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK((B.row(i).array() != 0.0).count() <= 4);
    }
}

TEST_CASE("fit matches the dense normal equations") {
    std::mt19937_64 rng(2);
    for (double lambda : {1e-3, 0.1, 1.0, 30.0}) {
        const Dataset d = noisy(rng, -1.0, 3.0, 60, 0.05, wave);
        const SplineModel s = fit_pspline(d, KnotGrid::uniform(-1.0, 3.0, 13), lambda);
        const Eigen::VectorXd ref = oracle::pspline(-1.0, 3.0, 13, d.x, d.y, lambda);
        CHECK((s.coefficients() - ref).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + ref.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("constant and linear data are reproduced") {
    const KnotGrid g = KnotGrid::uniform(0.0, 1.0, 9);
    Dataset c;
    Dataset l;
    for (int i = 0; i < 20; ++i) {
        const double x = i / 19.0;
        c.x.push_back(x);
        c.y.push_back(3.25);
        l.x.push_back(x);
        l.y.push_back(-2.0 * x + 0.5);
    }
    for (double lambda : {1e-2, 1.0, 1e3}) {
        const SplineModel sc = fit_pspline(c, g, lambda);
        CHECK((sc.coefficients().array() - 3.25).abs().maxCoeff() < 1e-10);
        const SplineModel sl = fit_pspline(l, g, lambda);
        for (double x = 0.0; x <= 1.0; x += 0.01) {
            CHECK(std::abs(sl.value(x) - (-2.0 * x + 0.5)) < 1e-8);
        }
    }
}

TEST_CASE("large lambda approaches the least squares line") {
    std::mt19937_64 rng(3);
    const Dataset d = noisy(rng, 0.0, 5.0, 80, 0.3, wave);
    const SplineModel s = fit_pspline(d, KnotGrid::uniform(0.0, 5.0, 12), 1e8);
    Eigen::MatrixXd X(80, 2);
    Eigen::VectorXd y(80);
    for (int i = 0; i < 80; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = d.x[static_cast<std::size_t>(i)];
        y[i] = d.y[static_cast<std::size_t>(i)];
    }
    const Eigen::Vector2d beta = X.colPivHouseholderQr().solve(y);
    for (double x = 0.0; x <= 5.0; x += 0.25) {
        CHECK(std::abs(s.value(x) - (beta[0] + beta[1] * x)) < 1e-4);
    }
}

TEST_CASE("singular systems") {
    Dataset d;
    d.x = {0.5, 0.5, 0.5, 0.5};
    d.y = {1.0, 2.0, 3.0, 4.0};
    try {
        fit_pspline(d, KnotGrid::uniform(0.0, 1.0, 9), 1.0);
        FAIL("expected an exception");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SingularSystem);
    }
    Dataset sparse;
    sparse.x = {0.1, 0.2, 0.3, 0.4};
    sparse.y = {1.0, 2.0, 0.0, 1.0};
    try {
        fit_pspline(sparse, KnotGrid::uniform(0.0, 1.0, 12), 0.0);
        FAIL("expected an exception");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SingularSystem);
    }
}

TEST_CASE("dataset validation") {
    const KnotGrid g = KnotGrid::uniform(0.0, 1.0, 7);
    Dataset d;
    d.x = {0.1, 0.2, 0.3};
    d.y = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(d.validate(), Error);
    d.x.push_back(0.4);
    CHECK_THROWS_AS(d.validate(), Error);
    d.y.push_back(1.0);
    d.validate(g);
    d.w = {1.0, 1.0, 0.0, 1.0};
    CHECK_THROWS_AS(d.validate(), Error);
    d.w.clear();
    d.x[0] = 2.0;
    try {
        d.validate(g);
        FAIL("expected an exception");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::OutOfDomain);
    }
    d.x[0] = std::nan("");
    CHECK_THROWS_AS(d.validate(), Error);
}

TEST_CASE("doubling the weights with lambda scaled by sqrt 2") {
    std::mt19937_64 rng(4);
    Dataset d = noisy(rng, 0.0, 3.0, 50, 0.1, wave);
    const KnotGrid g = KnotGrid::uniform(0.0, 3.0, 10);
    const SplineModel base = fit_pspline(d, g, 0.7);
    d.w.assign(50, 2.0);
    const SplineModel doubled = fit_pspline(d, g, 0.7 * std::sqrt(2.0));
    CHECK(max_abs_diff(base, doubled) < 1e-10);
}

TEST_CASE("QP form and least squares form have the same minimizer") {
    std::mt19937_64 rng(5);
    const Dataset d = noisy(rng, 0.0, 3.0, 50, 0.1, wave);
    const KnotGrid g = KnotGrid::uniform(0.0, 3.0, 10);
    const PenalizedSystem sys(assemble(d, g), g);
    const double lambda = 0.4;
    const QuadraticProgram qp = constrained_program(sys, lambda, {});
    const QpSolution sol = solve_qp(qp);
    const SplineModel via_qp(g, sys.to_coefficients(sol.x));
    const SplineModel direct = fit_pspline(d, g, lambda);
    CHECK(max_abs_diff(via_qp, direct) < 1e-10);
    // objectives differ by the constant y'Wy
    const double yy = Eigen::Map<const Eigen::VectorXd>(d.y.data(), 50).squaredNorm();
    CHECK(sol.objective + yy == doctest::Approx(pspline_objective(direct, d, lambda)).epsilon(1e-10));
    // any perturbation raises the objective
    Eigen::VectorXd a = direct.coefficients();
    a[3] += 1e-3;
    CHECK(pspline_objective(SplineModel(g, a), d, lambda) > pspline_objective(direct, d, lambda));
}

TEST_CASE("penalty and residual norms") {
    Eigen::VectorXd a(5);
    a << 1.0, 4.0, 9.0, 16.0, 25.0;  // second differences all 2
    CHECK(penalty_norm(a) == doctest::Approx(std::sqrt(12.0)));
    const KnotGrid g = KnotGrid::uniform(0.0, 1.0, 7);
    const SplineModel s(g, Eigen::VectorXd::Constant(7, 1.0));
    Dataset d;
    d.x = {0.0, 0.3, 0.6, 1.0};
    d.y = {1.5, 1.5, 1.5, 1.5};
    CHECK(rmse(s, d) == doctest::Approx(0.5));
    d.w = {4.0, 4.0, 4.0, 4.0};
    CHECK(residual_norm(s, d) == doctest::Approx(2.0));
    d.y = {1.0, 1.0, 1.0, 1.0};
    CHECK(rmse(s, d) < 1e-15);
}

TEST_CASE("nonnegative coefficient fit") {
    std::mt19937_64 rng(6);
    const KnotGrid g = KnotGrid::uniform(0.0, 5.0, 12);
    int dominance_failures = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const Dataset d = noisy(rng, 0.0, 5.0, 60, 0.1, [](double x) { return std::exp(-x) * std::cos(2.0 * x); });
        const SplineModel free = fit_pspline(d, g, 0.3);
        const SplineModel nnp = fit_nnp(d, g, 0.3);
        CHECK(nnp.coefficients().minCoeff() >= 0.0);
        dominance_failures += rmse(nnp, d) < rmse(free, d) - 1e-12;
    }
    CHECK(dominance_failures == 0);

    const Dataset pos = noisy(rng, 0.0, 5.0, 60, 0.01, [](double x) { return 5.0 + std::sin(x); });
    const SplineModel free = fit_pspline(pos, g, 0.3);
    REQUIRE(free.coefficients().minCoeff() > 0.0);
    CHECK(max_abs_diff(fit_nnp(pos, g, 0.3), free) < 1e-10);
}

TEST_CASE("fit with bound constraints") {
    std::mt19937_64 rng(7);
    const KnotGrid g = KnotGrid::uniform(0.0, 5.0, 12);
    const Dataset d = noisy(rng, 0.0, 5.0, 60, 0.05, [](double x) { return std::cos(1.3 * x); });
    const SplineModel free = fit_pspline(d, g, 0.2);

    const ConstrainedFit none = fit_constrained(d, g, 0.2, {});
    CHECK(max_abs_diff(none.model, free) < 1e-10);

    ConstraintSet slack;
    slack.lower.push_back({0.0, 0.0});
    REQUIRE(free.value(0.0) > 0.1);
    CHECK(max_abs_diff(fit_constrained(d, g, 0.2, slack).model, free) < 1e-10);

    ConstraintSet cs;
    for (double z = 0.0; z <= 5.0; z += 0.25) {
        cs.lower.push_back({z, 1e-8});
    }
    cs.upper.push_back({0.0, 0.8});
    const ConstrainedFit fit = fit_constrained(d, g, 0.2, cs);
    for (const Bound& bd : cs.lower) {
        CHECK(fit.model.value(bd.site) >= bd.value - 1e-9);
    }
    CHECK(fit.model.value(0.0) <= 0.8 + 1e-9);
}

TEST_CASE("small constrained fit against the enumeration oracle") {
    // n = 7 is the smallest basis; three bounds in the coefficient form
    // s(z) >= e, compared with enumerating working sets of the QP
    // min a'(B'B + l^2 T)a - 2 a'B'y.
    std::mt19937_64 rng(8);
    const double a = 0.0;
    const double b = 1.0;
    const int n = 7;
    const KnotGrid g = KnotGrid::uniform(a, b, n);
    Dataset d;
    std::normal_distribution<double> nd(0.0, 0.2);
    for (int i = 0; i < 8; ++i) {
        const double x = (i + 0.5) / 8.0;
        d.x.push_back(x);
        d.y.push_back(std::sin(6.0 * x) + nd(rng));
    }
    ConstraintSet cs;
    cs.lower = {{0.45, 0.0}, {0.55, 0.05}, {0.7, 0.0}};
    const double lambda = 0.05;
    const ConstrainedFit fit = fit_constrained(d, g, lambda, cs);

    const Eigen::MatrixXd B = oracle::dense_basis(a, b, n, d.x);
    const Eigen::MatrixXd D = oracle::d2(n);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(d.y.data(), 8);
    const Eigen::MatrixXd H = 2.0 * (B.transpose() * B + lambda * lambda * D.transpose() * D);
    const Eigen::VectorXd f = -2.0 * B.transpose() * y;
    const Eigen::MatrixXd G = oracle::dense_basis(a, b, n, {0.45, 0.55, 0.7});
    const auto ref = oracle::enumerate_qp(H, f, G, Eigen::Vector3d(0.0, 0.05, 0.0));
    REQUIRE(ref.found);
    CHECK((fit.model.coefficients() - ref.x).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(!fit.qp.active.empty());
}
