// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any fails.
#include "cli.hpp"
#include "cpspline/cpspline.hpp"
#include "cpspline/error.hpp"
#include "cpspline/io.hpp"
#include "cpspline/testproblems.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace cpspline;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void verdict(int id, bool pass, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    failures += !pass;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "cpspline");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("cpspline_acceptance_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size() / 2;
    return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

bool within_factor(double value, double target, double factor) {
    return value <= target * factor && value >= target / factor;
}

const std::vector<ProblemId> kAll = {ProblemId::TP1, ProblemId::TP2, ProblemId::TP3,
                                     ProblemId::TP4, ProblemId::TP5, ProblemId::GAUSS};

void nonnegativity() {
    bool pass = true;
    std::string detail;
    for (ProblemId id : kAll) {
        const fs::path dir = scratch("c1_" + to_string(id));
        const auto t0 = Clock::now();
        const int code = run_cli({"fit", "--testproblem", to_string(id), "--method", "cpspline", "--output-dir",
                                  dir.string()});
        const double secs = seconds_since(t0);
        const auto report = read_json(dir / "report.json");
        const double mn = report.at("min_on_plot_grid").get<double>();
        const int iters = report.at("iterations").get<int>();
        const bool conv = report.at("converged").get<bool>();
        const bool ok = code == 0 && conv && iters <= 20 && mn >= -1e-10 && secs < 1.0;
        pass = pass && ok;
        detail += fmt("%s min=%.3g it=%d %.2fs%s; ", to_string(id).c_str(), mn, iters, secs, ok ? "" : " (x)");
    }
    verdict(1, pass, detail);
}

void noiseless_rmse() {
    const struct {
        ProblemId id;
        double published;
    } cases[] = {{ProblemId::TP5, 4.69e-3}, {ProblemId::TP4, 1.16e-2}};
    bool pass = true;
    std::string detail;
    for (const auto& c : cases) {
        const TestProblemSpec spec = test_problem(c.id);
        const Dataset d = generate(spec);
        FitConfig cfg;
        const CpSplineFit fit = fit_cpspline(d, KnotGrid::uniform(spec.a, spec.b, spec.n), cfg);
        // floor for any nonnegative function: residual of max(y, 0) against y
        double floor = 0.0;
        for (double y : d.y) {
            floor += y < 0.0 ? y * y : 0.0;
        }
        floor = std::sqrt(floor / static_cast<double>(d.size()));
        // reported only: error against the truth clipped at zero
        double clipped = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double e = fit.model.value(d.x[i]) - std::max(spec.truth(d.x[i]), 0.0);
            clipped += e * e;
        }
        clipped = std::sqrt(clipped / static_cast<double>(d.size()));
        const bool ok = within_factor(fit.report.rmse, c.published, 2.0);
        pass = pass && ok;
        detail += fmt("%s rmse=%.3g target=%.3g (nonnegative floor %.3g, vs clipped truth %.3g); ",
                      to_string(c.id).c_str(), fit.report.rmse, c.published, floor, clipped);
    }
    verdict(2, pass, detail);
}

void method_ordering() {
    const struct {
        ProblemId id;
        double published;
    } cases[] = {{ProblemId::TP1, 1.02e-4}, {ProblemId::TP2, 4.39e-3}};
    const auto t0 = Clock::now();
    bool ordering = true;
    bool published = true;
    std::string detail;
    for (const auto& c : cases) {
        const fs::path dir = scratch("c3_" + to_string(c.id));
        if (run_cli({"compare", "--testproblem", to_string(c.id), "--realizations", "100", "--output-dir",
                     dir.string()}) != 0) {
            verdict(3, false, "compare failed on " + to_string(c.id));
            return;
        }
        std::ifstream in(dir / "compare.csv");
        std::string line;
        std::getline(in, line);
        std::vector<double> nnp, cp;
        while (std::getline(in, line)) {
            double r, a, b, e;
            if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &r, &a, &b, &e) == 4) {
                nnp.push_back(b);
                cp.push_back(e);
            }
        }
        const int matched = static_cast<int>(
            std::count_if(cp.begin(), cp.end(), [&](double v) { return within_factor(v, c.published, 3.0); }));
        ordering = ordering && cp.size() == 100 && median(cp) < median(nnp);
        published = published && 2 * matched >= static_cast<int>(cp.size());
        detail += fmt("%s median cp=%.3g nnp=%.3g, %d/100 within 3x of %.3g; ", to_string(c.id).c_str(),
                      median(cp), median(nnp), matched, c.published);
    }
    const double secs = seconds_since(t0);
    detail += fmt("%.1fs", secs);
    verdict(3, ordering && published && secs < 60.0,
            fmt("ordering %s, published values %s, runtime %s; ", ordering ? "ok" : "violated",
                published ? "matched" : "not matched", secs < 60.0 ? "ok" : "over budget") +
                detail);
}

void qp_oracle() {
    std::mt19937_64 rng(424242);
    std::uniform_int_distribution<int> size(1, 6);
    std::normal_distribution<double> nd;
    int agree = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = size(rng);
        const int p = size(rng);
        QuadraticProgram qp = QuadraticProgram::unconstrained(oracle::random_spd(rng, n), Eigen::VectorXd(n));
        Eigen::VectorXd x0(n);
        for (int i = 0; i < n; ++i) {
            qp.linear[i] = 2.0 * nd(rng);
            x0[i] = nd(rng);
        }
        qp.lower_rows.resize(p, n);
        qp.lower_bounds.resize(p);
        for (int r = 0; r < p; ++r) {
            for (int i = 0; i < n; ++i) {
                qp.lower_rows(r, i) = nd(rng);
            }
            // feasible by construction: x0 satisfies every row
            qp.lower_bounds[r] = qp.lower_rows.row(r).dot(x0) - std::abs(nd(rng));
        }
        const auto ref = oracle::enumerate_qp(qp.hessian, qp.linear, qp.lower_rows, qp.lower_bounds);
        try {
            const QpSolution sol = solve_qp(qp);
            const double dx = (sol.x - ref.x).cwiseAbs().maxCoeff();
            const double dobj = std::abs(sol.objective - ref.objective);
            worst = std::max({worst, dx, dobj});
            agree += ref.found && dx <= 1e-8 && dobj <= 1e-8;
        } catch (const Error&) {
        }
    }
    verdict(4, agree == 200, fmt("%d/200 instances agree, worst deviation %.2g", agree, worst));
}

void certificate_soundness() {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> nd;
    long certified = 0;
    long violations = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 8 + trial % 10;
        const KnotGrid g = KnotGrid::uniform(0.0, 1.0, n);
        Dataset d;
        const double shift = 0.5 * nd(rng);
        for (int i = 0; i < 40; ++i) {
            d.x.push_back(u(rng));
            d.y.push_back(shift + std::sin(6.0 * d.x.back() + trial) + 0.1 * nd(rng));
        }
        ConstraintSet cs;
        SamplingState st;
        for (int i = 0; i < 25; ++i) {
            st.points.push_back(u(rng));
        }
        std::sort(st.points.begin(), st.points.end());
        for (double z : st.points) {
            const double e = 0.3 * u(rng) * u(rng);
            cs.lower.push_back({z, e});
            st.forcing.push_back(e);
        }
        const ConstrainedFit fit = fit_constrained(d, g, 0.05 + u(rng), cs);
        st.active = detect_activity(fit.model, st, 1e-9);
        for (const CertifiedInterval& ci : certify_positivity(fit.model, st)) {
            if (!ci.certified) {
                continue;
            }
            ++certified;
            for (int k = 0; k < 10000; ++k) {
                violations += fit.model.value(ci.interval.lo + ci.interval.width() * k / 9999.0) <= 0.0;
            }
        }
    }
    verdict(5, violations == 0 && certified > 0,
            fmt("%ld certified intervals over 200 models, %ld dense-sample violations", certified, violations));
}

void basis_invariants() {
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_int_distribution<int> dim(7, 40);
    std::normal_distribution<double> nd;
    int bad_unity = 0, bad_deriv = 0, bad_null = 0, bad_linear = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const double a = -10.0 + 20.0 * u01(rng);
        const double b = a + 0.1 + 20.0 * u01(rng);
        const int n = dim(rng);
        const KnotGrid g = KnotGrid::uniform(a, b, n);
        const double x = a + (b - a) * u01(rng);
        double sum = 0.0;
        for (double v : basis_row(g, x)) {
            sum += v;
        }
        bad_unity += std::abs(sum - 1.0) >= 1e-12;

        Eigen::VectorXd c(n);
        for (int j = 0; j < n; ++j) {
            c[j] = nd(rng);
        }
        const SplineModel s(g, c);
        const double step = 1e-6 * g.spacing();
        const double xi = std::clamp(x, a + step, b - step);
        const double fd = (s.value(xi + step) - s.value(xi - step)) / (2.0 * step);
        bad_deriv += std::abs(s.derivative(xi) - fd) > 1e-6 * std::max(1.0, std::abs(fd));

        const Eigen::MatrixXd T = penalty_matrix(n);
        bad_null += (T * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff() > 1e-12;
        bad_null += (T * Eigen::VectorXd::LinSpaced(n, 1.0, n)).cwiseAbs().maxCoeff() > 1e-12;

        const double alpha = nd(rng);
        const double beta = nd(rng);
        Eigen::VectorXd lin(n);
        for (int j = 0; j < n; ++j) {
            lin[j] = alpha * g.greville(j) + beta;
        }
        bad_linear += std::abs(SplineModel(g, lin).value(x) - (alpha * x + beta)) > 1e-10 * (1.0 + std::abs(alpha * x + beta));
    }
    verdict(6, bad_unity + bad_deriv + bad_null + bad_linear == 0,
            fmt("1000 cases: unity %d, derivative %d, null space %d, linear %d failures", bad_unity, bad_deriv,
                bad_null, bad_linear));
}

void warm_start() {
    int solves = 0;
    int mismatched = 0;
    double worst = 0.0;
    for (ProblemId id : {ProblemId::TP1, ProblemId::TP2, ProblemId::TP3, ProblemId::TP4, ProblemId::TP5}) {
        const TestProblemSpec spec = test_problem(id);
        const Dataset d = generate(spec);
        FitConfig cfg;
        cfg.observer = [&](const IterationRecord& r) {
            if (r.warm_start == nullptr) {
                return;
            }
            const ConstrainedFit cold = fit_constrained(*r.system, r.lambda, *r.constraints, nullptr);
            const double diff = (cold.model.coefficients() - r.model->coefficients()).cwiseAbs().maxCoeff();
            worst = std::max(worst, diff);
            mismatched += diff > 1e-8;
            ++solves;
        };
        fit_cpspline(d, KnotGrid::uniform(spec.a, spec.b, spec.n), cfg);
    }
    verdict(7, mismatched == 0 && solves > 0,
            fmt("%d warm-started solves, %d disagree, worst %.2g", solves, mismatched, worst));
}

void reduction() {
    Dataset d;
    for (int i = 0; i < 100; ++i) {
        const double x = i == 99 ? 2.0 * std::numbers::pi : 2.0 * std::numbers::pi * i / 99.0;
        d.x.push_back(x);
        d.y.push_back(std::sin(x) + 2.0);
    }
    const KnotGrid g = KnotGrid::uniform(0.0, 2.0 * std::numbers::pi, 9);
    const CpSplineFit fit = fit_cpspline(d, g, FitConfig{});
    const SplineModel free = fit_pspline(d, g, fit.report.lambda_used);
    const double diff = (fit.model.coefficients() - free.coefficients()).cwiseAbs().maxCoeff();
    verdict(8, diff <= 1e-10 && fit.report.iterations == 1 && fit.report.converged,
            fmt("iterations %d, max coefficient difference %.2g", fit.report.iterations, diff));
}

}  // namespace

int main() {
    try {
        nonnegativity();
        noiseless_rmse();
        method_ordering();
        qp_oracle();
        certificate_soundness();
        basis_invariants();
        warm_start();
        reduction();
    } catch (const std::exception& e) {
        std::printf("FAIL aborted: %s\n", e.what());
        return 1;
    }
    return failures == 0 ? 0 : 1;
}
