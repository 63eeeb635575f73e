#include "cli.hpp"

#include "cpspline/cpspline.hpp"
#include "cpspline/error.hpp"
#include "cpspline/io.hpp"
#include "cpspline/testproblems.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace cpspline::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
    std::string input;
    std::string testproblem;
    int basis_size = 0;  // 0: problem default, or 15 for CSV input
    std::uint64_t seed = kDefaultSeed;
    std::string method = "cpspline";
    std::string lambda = "auto";
    std::string selector = "lcurve";
    double lambda_min = 1e-6;
    double lambda_max = 1e6;
    int lambda_count = 60;
    int mu = 5;
    double epsilon = 1e-8;
    int max_iter = 20;
    int grid_points = 1000;
    int realizations = 1;
    std::string output_dir = ".";
    bool timing = false;
    bool serial = false;
};

struct Source {
    Dataset data;
    KnotGrid grid;
    std::function<double(double)> truth;
    json echo;
};

Source load_source(const Options& opt, std::uint64_t realization) {
    if (opt.input.empty() == opt.testproblem.empty()) {
        throw Error(ErrorKind::InvalidArgument, "give exactly one of --input or --testproblem");
    }
    if (!opt.testproblem.empty()) {
        TestProblemSpec spec = test_problem(parse_problem_id(opt.testproblem), opt.seed);
        spec.realization = realization;
        if (opt.basis_size > 0) {
            spec.n = opt.basis_size;
        }
        Dataset data = generate(spec);
        json echo = {{"testproblem", to_string(spec.id)},
                     {"basis_size", spec.n},
                     {"realization", realization},
                     {"rng", std::string(kRngAlgorithm)}};
        return Source{std::move(data), KnotGrid::uniform(spec.a, spec.b, spec.n), spec.truth, std::move(echo)};
    }
    Dataset data = read_csv(opt.input);
    const int n = opt.basis_size > 0 ? opt.basis_size : 15;
    KnotGrid grid = KnotGrid::uniform(data.min_site(), data.max_site(), n);
    json echo = {{"input", fs::path(opt.input).filename().string()}, {"basis_size", n}};
    return Source{std::move(data), std::move(grid), {}, std::move(echo)};
}

FitConfig make_config(const Options& opt) {
    FitConfig cfg;
    if (opt.lambda != "auto") {
        try {
            std::size_t used = 0;
            cfg.lambda = std::stod(opt.lambda, &used);
            if (used != opt.lambda.size()) {
                throw std::invalid_argument("trailing characters");
            }
        } catch (const std::exception&) {
            throw Error(ErrorKind::InvalidArgument, "--lambda must be a number or 'auto'");
        }
    }
    cfg.selector = opt.selector == "gcv" ? LambdaSelector::gcv : LambdaSelector::lcurve;
    cfg.lambda_grid = LambdaGrid::logspace(opt.lambda_min, opt.lambda_max, opt.lambda_count);
    cfg.mu = opt.mu;
    cfg.epsilon = opt.epsilon;
    cfg.max_iter = opt.max_iter;
    cfg.seed = opt.seed;
    cfg.exec = opt.serial ? Execution::serial : Execution::parallel;
    cfg.validate();
    return cfg;
}

json config_echo(const Options& opt, const Source& src) {
    json echo = src.echo;
    echo["method"] = opt.method;
    echo["lambda"] = opt.lambda;
    echo["selector"] = opt.selector;
    echo["lambda_grid"] = {opt.lambda_min, opt.lambda_max, opt.lambda_count};
    echo["mu"] = opt.mu;
    echo["epsilon"] = opt.epsilon;
    echo["max_iter"] = opt.max_iter;
    echo["grid_points"] = opt.grid_points;
    return echo;
}

struct MethodResult {
    SplineModel model;
    FitReport report;
    std::optional<SamplingState> state;
};

MethodResult run_method(const std::string& method, const Source& src, const FitConfig& cfg) {
    if (method == "cpspline") {
        CpSplineFit fit = fit_cpspline(src.data, src.grid, cfg);
        return MethodResult{std::move(fit.model), std::move(fit.report), std::move(fit.state)};
    }
    src.data.validate(src.grid);
    const PenalizedSystem system(assemble(src.data, src.grid, cfg.exec), src.grid);
    const LambdaChoice choice = choose_lambda(system, src.data, cfg);
    SplineModel model = method == "nnp" ? fit_nnp(system, choice.lambda) : fit_pspline(system, choice.lambda);
    FitReport report;
    report.lambda_used = choice.lambda;
    report.lambda_degenerate = choice.degenerate;
    report.rmse = rmse(model, src.data);
    const GridMinimum gm = min_on_grid(model, cfg.verify_density, cfg.exec);
    report.min_on_grid = gm.value;
    report.argmin_on_grid = gm.location;
    const GridMinimum exact = spline_minimum(model);
    report.minimum = exact.value;
    report.argminimum = exact.location;
    report.converged = true;
    return MethodResult{std::move(model), std::move(report), std::nullopt};
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
    }
}

int cmd_fit(const Options& opt, std::ostream& out) {
    const Source src = load_source(opt, 0);
    const FitConfig cfg = make_config(opt);
    if (opt.grid_points < 2) {
        throw Error(ErrorKind::InvalidArgument, "--grid-points must be >= 2");
    }
    const MethodResult result = run_method(opt.method, src, cfg);

    const fs::path dir(opt.output_dir);
    ensure_dir(dir);
    const ModelDocument doc = ModelDocument::from_model(result.model, result.report.lambda_used, opt.seed,
                                                        opt.method, config_echo(opt, src));
    write_text(dir / "model.json", dump_json(doc.to_json()));

    const std::vector<double> xs = kernels::linspace(src.grid.lower(), src.grid.upper(), opt.grid_points);
    const std::vector<double> values = kernels::evaluate(result.model, xs, cfg.exec);
    const auto [imin, vmin] = kernels::argmin(values);

    json report = report_to_json(result.report, result.state ? &*result.state : nullptr, opt.timing);
    report["method"] = opt.method;
    report["seed"] = opt.seed;
    report["rng"] = std::string(kRngAlgorithm);
    report["grid_points"] = opt.grid_points;
    report["min_on_plot_grid"] = vmin;
    report["argmin_on_plot_grid"] = xs[imin];
    write_text(dir / "report.json", dump_json(report));

    std::ostringstream plot;
    write_plot_csv(plot, result.model, opt.grid_points, src.truth);
    write_text(dir / "plot.csv", plot.str());
    std::ostringstream data;
    write_csv(data, src.data);
    write_text(dir / "data.csv", data.str());

    out << opt.method << ": lambda=" << format_double(result.report.lambda_used)
        << " rmse=" << format_double(result.report.rmse) << " min=" << format_double(vmin);
    if (result.state) {
        out << " iterations=" << result.report.iterations << " converged=" << std::boolalpha
            << result.report.converged;
    }
    out << '\n';
    return result.report.converged ? kOk : kNotConverged;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size() / 2;
    return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

int cmd_compare(const Options& opt, std::ostream& out) {
    if (opt.realizations < 1) {
        throw Error(ErrorKind::InvalidArgument, "--realizations must be >= 1");
    }
    if (opt.realizations > 1 && opt.testproblem.empty()) {
        throw Error(ErrorKind::InvalidArgument, "--realizations needs --testproblem");
    }
    FitConfig cfg = make_config(opt);
    // Realizations are the parallel axis; each fit runs its kernels serially.
    cfg.exec = Execution::serial;
    const std::vector<std::string> methods = {"pspline", "nnp", "cpspline"};
    const int count = opt.realizations;
    std::vector<std::array<double, 3>> rmses(static_cast<std::size_t>(count));
    std::vector<std::string> errors(static_cast<std::size_t>(count));
    std::vector<int> error_codes(static_cast<std::size_t>(count), kOk);

#pragma omp parallel for schedule(dynamic, 1) if (!opt.serial)
    for (int r = 0; r < count; ++r) {
        const auto idx = static_cast<std::size_t>(r);
        try {
            const Source src = load_source(opt, static_cast<std::uint64_t>(r));
            for (std::size_t k = 0; k < methods.size(); ++k) {
                rmses[idx][k] = run_method(methods[k], src, cfg).report.rmse;
            }
        } catch (const Error& e) {
            errors[idx] = e.what();
            error_codes[idx] = e.is_solver_failure() ? kSolverError : kInputError;
        }
    }
    for (int r = 0; r < count; ++r) {
        if (error_codes[static_cast<std::size_t>(r)] != kOk) {
            throw Error(error_codes[static_cast<std::size_t>(r)] == kSolverError ? ErrorKind::SingularSystem
                                                                                : ErrorKind::InvalidArgument,
                        "realization " + std::to_string(r) + ": " + errors[static_cast<std::size_t>(r)]);
        }
    }

    const fs::path dir(opt.output_dir);
    ensure_dir(dir);
    std::ostringstream rows;
    rows << "realization,pspline,nnp,cpspline\n";
    for (int r = 0; r < count; ++r) {
        const auto& v = rmses[static_cast<std::size_t>(r)];
        rows << r << ',' << format_double(v[0]) << ',' << format_double(v[1]) << ',' << format_double(v[2]) << '\n';
    }
    write_text(dir / "compare.csv", rows.str());

    std::ostringstream summary;
    summary << "method,min,median,max\n";
    out << std::left << std::setw(10) << "method" << std::setw(14) << "min" << std::setw(14) << "median"
        << "max\n";
    for (std::size_t k = 0; k < methods.size(); ++k) {
        std::vector<double> col;
        for (const auto& v : rmses) {
            col.push_back(v[k]);
        }
        const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
        const double med = median(col);
        summary << methods[k] << ',' << format_double(*lo) << ',' << format_double(med) << ','
                << format_double(*hi) << '\n';
        out << std::setw(10) << methods[k] << std::setw(14) << std::setprecision(6) << *lo << std::setw(14) << med
            << *hi << '\n';
    }
    write_text(dir / "compare_summary.csv", summary.str());
    return kOk;
}

int cmd_lcurve(const Options& opt, std::ostream& out) {
    const Source src = load_source(opt, 0);
    const FitConfig cfg = make_config(opt);
    src.data.validate(src.grid);
    const PenalizedSystem system(assemble(src.data, src.grid, cfg.exec), src.grid);

    const fs::path dir(opt.output_dir);
    ensure_dir(dir);
    std::ostringstream csv;
    double chosen = 0.0;
    bool degenerate = false;
    if (cfg.selector == LambdaSelector::gcv) {
        const GcvResult g = gcv_select(system, src.data, cfg.lambda_grid, cfg.exec);
        csv << "lambda,gcv_score,edf\n";
        for (std::size_t i = 0; i < g.scores.size(); ++i) {
            csv << format_double(cfg.lambda_grid[i]) << ',' << format_double(g.scores[i]) << ','
                << format_double(g.traces[i]) << '\n';
        }
        chosen = g.lambda;
    } else {
        const LCurveResult lc = lcurve_select(system, src.data, cfg.lambda_grid, cfg.exec);
        csv << "lambda,residual_norm,penalty_norm,curvature\n";
        for (const LCurvePoint& p : lc.curve) {
            csv << format_double(p.lambda) << ',' << format_double(p.residual_norm) << ','
                << format_double(p.penalty_norm) << ',' << format_double(p.curvature) << '\n';
        }
        chosen = lc.lambda;
        degenerate = lc.degenerate;
    }
    write_text(dir / "lcurve.csv", csv.str());
    out << "lambda* = " << format_double(chosen) << '\n';
    if (degenerate) {
        out << "warning: penalty norm vanishes on the whole grid (data are linear); lambda* is the grid maximum\n";
    }
    return kOk;
}

void add_common(CLI::App* cmd, Options& opt) {
    cmd->add_option("--input", opt.input, "CSV file with header x,y[,w]");
    cmd->add_option("--testproblem", opt.testproblem, "TP1..TP5 or GAUSS");
    cmd->add_option("--basis-size", opt.basis_size, "number of B-spline coefficients n (>= 7)");
    cmd->add_option("--seed", opt.seed, "seed for random sites and noise");
    cmd->add_option("--lambda", opt.lambda, "smoothing parameter, or 'auto'");
    cmd->add_option("--selector", opt.selector, "lambda selection criterion")
        ->check(CLI::IsMember({"lcurve", "gcv"}));
    cmd->add_option("--lambda-min", opt.lambda_min, "smallest lambda of the search grid");
    cmd->add_option("--lambda-max", opt.lambda_max, "largest lambda of the search grid");
    cmd->add_option("--lambda-count", opt.lambda_count, "size of the search grid");
    cmd->add_option("--output-dir", opt.output_dir, "directory for output files");
    cmd->add_flag("--serial", opt.serial, "run every kernel on one thread");
}

void add_fit_options(CLI::App* cmd, Options& opt) {
    cmd->add_option("--mu", opt.mu, "longest run of active sampling points");
    cmd->add_option("--epsilon", opt.epsilon, "forcing increment");
    cmd->add_option("--max-iter", opt.max_iter, "outer iteration cap");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cubic P-spline fitting with pointwise lower bounds"};
    app.require_subcommand(1);
    Options opt;

    CLI::App* fit = app.add_subcommand("fit", "fit one dataset and write model, report and plot grid");
    add_common(fit, opt);
    add_fit_options(fit, opt);
    fit->add_option("--method", opt.method, "fitting method")->check(CLI::IsMember({"pspline", "nnp", "cpspline"}));
    fit->add_option("--grid-points", opt.grid_points, "resolution of plot.csv");
    fit->add_flag("--timing", opt.timing, "include wall-clock time in report.json");

    CLI::App* compare = app.add_subcommand("compare", "RMSE of P-spline, NNP-spline and CP-spline");
    add_common(compare, opt);
    add_fit_options(compare, opt);
    compare->add_option("--realizations", opt.realizations, "number of noise realizations");

    CLI::App* lcurve = app.add_subcommand("lcurve", "export the L-curve (or GCV curve) and the chosen lambda");
    add_common(lcurve, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, er;
        const int code = app.exit(e, o, er);
        out << o.str();
        err << er.str();
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (fit->parsed()) {
            return cmd_fit(opt, out);
        }
        if (compare->parsed()) {
            return cmd_compare(opt, out);
        }
        return cmd_lcurve(opt, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.is_solver_failure() ? kSolverError : kInputError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }
}

}  // namespace cpspline::cli
