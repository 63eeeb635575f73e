#include "cpspline/testproblems.hpp"

#include "cpspline/error.hpp"
#include "cpspline/kernels.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>

namespace cpspline {

namespace {

class NoiseSource {
public:
    explicit NoiseSource(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

// Control points of the TP3 stand-in curve.
constexpr std::array<double, 6> kTp3X = {0.0, 2.0, 4.0, 6.0, 8.0, 10.0};
constexpr std::array<double, 6> kTp3Y = {1.0, 0.45, -0.25, 0.15, 0.9, 0.55};

struct NaturalCubic {
    std::array<double, 6> second{};  // second derivatives at the nodes

    NaturalCubic() {
        constexpr std::size_t n = kTp3X.size();
        std::array<double, n> diag{}, rhs{}, upper{};
        // Tridiagonal system for interior second derivatives; ends are zero.
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = kTp3X[i] - kTp3X[i - 1];
            const double h1 = kTp3X[i + 1] - kTp3X[i];
            diag[i] = 2.0 * (h0 + h1);
            upper[i] = h1;
            rhs[i] = 6.0 * ((kTp3Y[i + 1] - kTp3Y[i]) / h1 - (kTp3Y[i] - kTp3Y[i - 1]) / h0);
        }
        for (std::size_t i = 2; i + 1 < n; ++i) {
            const double lower = kTp3X[i] - kTp3X[i - 1];
            const double factor = lower / diag[i - 1];
            diag[i] -= factor * upper[i - 1];
            rhs[i] -= factor * rhs[i - 1];
        }
        for (std::size_t i = n - 2; i >= 1; --i) {
            second[i] = (rhs[i] - upper[i] * second[i + 1]) / diag[i];
        }
    }

    double operator()(double x) const {
        std::size_t k = 0;
        while (k + 2 < kTp3X.size() && x > kTp3X[k + 1]) {
            ++k;
        }
        const double h = kTp3X[k + 1] - kTp3X[k];
        const double t1 = (kTp3X[k + 1] - x) / h;
        const double t0 = (x - kTp3X[k]) / h;
        return t1 * kTp3Y[k] + t0 * kTp3Y[k + 1] +
               ((t1 * t1 * t1 - t1) * second[k] + (t0 * t0 * t0 - t0) * second[k + 1]) * h * h / 6.0;
    }
};

}  // namespace

double tp3_truth(double x) {
    static const NaturalCubic spline;
    return spline(x);
}

TestProblemSpec test_problem(ProblemId id, std::uint64_t seed) {
    TestProblemSpec spec;
    spec.id = id;
    spec.seed = seed;
    switch (id) {
    case ProblemId::TP1:
        spec.n = 15;
        spec.a = -20.0;
        spec.b = 20.0;
        spec.m = 50;
        spec.sigma = 1e-3;
        spec.scheme = SiteScheme::random_uniform;
        spec.truth = [](double x) {
            const double sd = 1.5;
            return std::exp(-0.5 * x * x / (sd * sd)) / (sd * std::sqrt(2.0 * std::numbers::pi));
        };
        break;
    case ProblemId::TP2:
        spec.n = 15;
        spec.a = 1.0;
        spec.b = 3.0;
        spec.m = 30;
        spec.sigma = 0.015;
        spec.truth = [](double x) {
            const double s = std::sin(6.0 * x);
            return s == 0.0 ? 0.0 : std::exp(-1.0 / (s * s));
        };
        break;
    case ProblemId::TP3:
        spec.n = 9;
        spec.a = 0.0;
        spec.b = 10.0;
        spec.m = 100;
        spec.truth = tp3_truth;
        break;
    case ProblemId::TP4:
        spec.n = 9;
        spec.a = 0.0;
        spec.b = 2.0 * std::numbers::pi;
        spec.m = 100;
        spec.truth = [](double x) { return std::sin(x) + 0.9; };
        break;
    case ProblemId::TP5:
        spec.n = 9;
        spec.a = 0.0;
        spec.b = 5.0;
        spec.m = 100;
        spec.truth = [](double x) { return std::exp(-x) * std::cos(x); };
        break;
    case ProblemId::GAUSS:
        spec.n = 30;
        spec.a = 0.0;
        spec.b = 200.0;
        spec.m = 201;
        spec.sigma = 3.0;
        spec.truth = [](double x) { return std::exp(4.0 - x / 25.0) + 4.0 * std::cos(x / 8.0); };
        break;
    }
    return spec;
}

ProblemId parse_problem_id(std::string_view name) {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (upper == "TP1") return ProblemId::TP1;
    if (upper == "TP2") return ProblemId::TP2;
    if (upper == "TP3") return ProblemId::TP3;
    if (upper == "TP4") return ProblemId::TP4;
    if (upper == "TP5") return ProblemId::TP5;
    if (upper == "GAUSS") return ProblemId::GAUSS;
    throw Error(ErrorKind::UnknownProblem, "unknown test problem '" + std::string(name) + "'");
}

std::string to_string(ProblemId id) {
    switch (id) {
    case ProblemId::TP1: return "TP1";
    case ProblemId::TP2: return "TP2";
    case ProblemId::TP3: return "TP3";
    case ProblemId::TP4: return "TP4";
    case ProblemId::TP5: return "TP5";
    case ProblemId::GAUSS: return "GAUSS";
    }
    return "?";
}

Dataset generate(const TestProblemSpec& spec) {
    if (spec.m < 4 || !(spec.a < spec.b) || !spec.truth) {
        throw Error(ErrorKind::InvalidArgument, "invalid test problem specification");
    }
    Dataset data;
    if (spec.scheme == SiteScheme::linear) {
        data.x = kernels::linspace(spec.a, spec.b, spec.m);
    } else {
        NoiseSource sites(spec.seed);
        data.x.resize(static_cast<std::size_t>(spec.m));
        for (double& x : data.x) {
            x = spec.a + (spec.b - spec.a) * sites.uniform();
        }
    }
    NoiseSource noise(spec.seed + 0x9E3779B97F4A7C15ULL * (spec.realization + 1));
    data.y.resize(data.x.size());
    for (std::size_t i = 0; i < data.x.size(); ++i) {
        data.y[i] = spec.truth(data.x[i]);
        if (spec.sigma > 0.0) {
            data.y[i] += spec.sigma * noise.normal();
        }
    }
    return data;
}

}  // namespace cpspline
