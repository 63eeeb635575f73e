#pragma once

#include "cpspline/pspline.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace cpspline {

enum class ProblemId { TP1, TP2, TP3, TP4, TP5, GAUSS };

enum class SiteScheme { random_uniform, linear };

/// Identifier of the generator behind every noise realization: 64-bit
/// Mersenne Twister, uniforms from the top 53 bits, normals by Box-Muller
/// (cosine branch only).
inline constexpr std::string_view kRngAlgorithm = "mt19937_64+boxmuller53";

inline constexpr std::uint64_t kDefaultSeed = 20240601;

struct TestProblemSpec {
    ProblemId id = ProblemId::TP5;
    int n = 9;
    double a = 0.0;
    double b = 1.0;
    int m = 100;
    double sigma = 0.0;
    SiteScheme scheme = SiteScheme::linear;
    std::function<double(double)> truth;
    std::uint64_t seed = kDefaultSeed;  ///< drives random sites and noise
    std::uint64_t realization = 0;      ///< selects an independent noise stream
};

/// Parameters of a shipped problem (sizes, domain, noise, truth).
TestProblemSpec test_problem(ProblemId id, std::uint64_t seed = kDefaultSeed);

/// Case-insensitive "TP1".."TP5", "GAUSS"; throws UnknownProblem.
ProblemId parse_problem_id(std::string_view name);
std::string to_string(ProblemId id);

/// Deterministic for a given (seed, realization).
Dataset generate(const TestProblemSpec& spec);

/// Stand-in TP3 truth: natural cubic spline through fixed control points on
/// [0, 10] that dips below zero around x = 4.
double tp3_truth(double x);

}  // namespace cpspline
