/**
 * @file io.hpp
 * @brief CSV datasets, model/report JSON documents and plot grids.
 *
 * Formats:
 *   data CSV    header "x,y" or "x,y,w"; rows in any order
 *   plot CSV    header "x,spline" or "x,spline,truth"
 *   model JSON  {"schema":"cpspline/1","degree":3,"domain":[a,b],"knots":[..],
 *                "coefficients":[..],"lambda":..,"seed":..,"method":..,"provenance":{..}}
 *
 * Numbers are written in shortest round-trip form, so write -> read -> write
 * reproduces a file byte for byte.
 */
#pragma once

#include "cpspline/bspline.hpp"
#include "cpspline/cpspline.hpp"
#include "cpspline/pspline.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "json.hpp"

namespace cpspline {

inline constexpr std::string_view kModelSchema = "cpspline/1";

Dataset parse_csv(std::istream& in);
Dataset read_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, const Dataset& data);

struct ModelDocument {
    std::string schema{kModelSchema};
    int degree = 3;
    double a = 0.0;
    double b = 1.0;
    std::vector<double> knots;
    std::vector<double> coefficients;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    std::string method;
    nlohmann::json provenance = nlohmann::json::object();

    static ModelDocument from_model(const SplineModel& model, double lambda, std::uint64_t seed,
                                    std::string method, nlohmann::json provenance = nlohmann::json::object());
    /// Rebuilds the spline; throws InvalidArgument if the knots are not the
    /// uniform grid implied by the domain and coefficient count.
    SplineModel to_model() const;

    nlohmann::json to_json() const;
    static ModelDocument from_json(const nlohmann::json& j);
};

std::string dump_json(const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

nlohmann::json report_to_json(const FitReport& report, const SamplingState* state, bool include_timing);

/// Plot grid of `count` points; truth column only when a truth function is given.
void write_plot_csv(std::ostream& out, const SplineModel& model, int count,
                    const std::function<double(double)>& truth = {});

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace cpspline
