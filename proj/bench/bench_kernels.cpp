// Serial reference vs OpenMP path for the hot loops.
#include "cpspline/cpspline.hpp"
#include "cpspline/testproblems.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace cpspline;

namespace {

Execution mode(const benchmark::State& state) {
    return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

SplineModel random_model(int n) {
    const KnotGrid grid = KnotGrid::uniform(0.0, 1.0, n);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd a(n);
    for (int j = 0; j < n; ++j) {
        a[j] = u(rng);
    }
    return SplineModel(grid, a);
}

void BM_Evaluate(benchmark::State& state) {
    const SplineModel model = random_model(200);
    const std::vector<double> xs = kernels::linspace(0.0, 1.0, static_cast<int>(state.range(1)));
    std::vector<double> out(xs.size());
    const Execution exec = mode(state);
    for (auto _ : state) {
        kernels::evaluate(model, xs, out, exec);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(1));
}

void BM_AccumulateNormal(benchmark::State& state) {
    const int n = 200;
    const KnotGrid grid = KnotGrid::uniform(0.0, 1.0, n);
    const auto m = static_cast<std::size_t>(state.range(1));
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<LocalBasis> rows;
    std::vector<double> y(m), w(m, 1.0);
    for (std::size_t i = 0; i < m; ++i) {
        rows.push_back(local_basis(grid, u(rng)));
        y[i] = u(rng);
    }
    const Execution exec = mode(state);
    for (auto _ : state) {
        auto acc = kernels::accumulate_normal(rows, y, w, n, exec);
        benchmark::DoNotOptimize(acc.gram.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(1));
}

struct Sweep {
    Dataset data;
    KnotGrid grid;
    PenalizedSystem system;
};

Sweep make_sweep() {
    TestProblemSpec spec = test_problem(ProblemId::GAUSS);
    spec.m = 2000;
    spec.n = 60;
    Dataset data = generate(spec);
    KnotGrid grid = KnotGrid::uniform(spec.a, spec.b, spec.n);
    PenalizedSystem system(assemble(data, grid), grid);
    return Sweep{std::move(data), std::move(grid), std::move(system)};
}

void BM_LCurve(benchmark::State& state) {
    const Sweep s = make_sweep();
    const LambdaGrid lambdas = LambdaGrid::standard();
    const Execution exec = mode(state);
    for (auto _ : state) {
        benchmark::DoNotOptimize(lcurve_select(s.system, s.data, lambdas, exec).lambda);
    }
}

void BM_Gcv(benchmark::State& state) {
    const Sweep s = make_sweep();
    const LambdaGrid lambdas = LambdaGrid::standard();
    const Execution exec = mode(state);
    for (auto _ : state) {
        benchmark::DoNotOptimize(gcv_select(s.system, s.data, lambdas, exec).lambda);
    }
}

void BM_FitCpspline(benchmark::State& state) {
    const TestProblemSpec spec = test_problem(ProblemId::TP1);
    const Dataset data = generate(spec);
    const KnotGrid grid = KnotGrid::uniform(spec.a, spec.b, spec.n);
    FitConfig cfg;
    cfg.exec = mode(state);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_cpspline(data, grid, cfg).report.minimum);
    }
}

}  // namespace

// First argument: 0 serial, 1 OpenMP.
BENCHMARK(BM_Evaluate)->ArgsProduct({{0, 1}, {1 << 12, 1 << 16, 1 << 20}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_AccumulateNormal)->ArgsProduct({{0, 1}, {1 << 12, 1 << 16, 1 << 20}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_LCurve)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Gcv)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitCpspline)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
