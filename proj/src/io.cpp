#include "cpspline/io.hpp"

#include "cpspline/error.hpp"
#include "cpspline/kernels.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cpspline {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) {
            return out;
        }
        start = comma + 1;
    }
}

double parse_number(std::string_view token, std::size_t line_no) {
    if (!token.empty() && token.front() == '+') {
        token.remove_prefix(1);
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
        throw Error(ErrorKind::InvalidArgument,
                    "line " + std::to_string(line_no) + ": cannot parse '" + std::string(token) + "' as a number");
    }
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) {
        throw Error(ErrorKind::Io, "number formatting failed");
    }
    return std::string(buf, ptr);
}

Dataset parse_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    bool weighted = false;
    bool have_header = false;
    Dataset data;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view(line);
        if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) {
            view.remove_prefix(3);
        }
        view = trim(view);
        if (view.empty()) {
            continue;
        }
        const auto fields = split(view);
        if (!have_header) {
            if (fields.size() == 2 && fields[0] == "x" && fields[1] == "y") {
                weighted = false;
            } else if (fields.size() == 3 && fields[0] == "x" && fields[1] == "y" && fields[2] == "w") {
                weighted = true;
            } else {
                throw Error(ErrorKind::InvalidArgument, "CSV header must be 'x,y' or 'x,y,w'");
            }
            have_header = true;
            continue;
        }
        if (fields.size() != (weighted ? 3u : 2u)) {
            throw Error(ErrorKind::InvalidArgument, "line " + std::to_string(line_no) + ": wrong number of fields");
        }
        data.x.push_back(parse_number(fields[0], line_no));
        data.y.push_back(parse_number(fields[1], line_no));
        if (weighted) {
            data.w.push_back(parse_number(fields[2], line_no));
        }
    }
    if (!have_header) {
        throw Error(ErrorKind::InvalidArgument, "CSV input is empty");
    }
    data.validate();
    return data;
}

Dataset read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    }
    return parse_csv(in);
}

void write_csv(std::ostream& out, const Dataset& data) {
    const bool weighted = !data.w.empty();
    out << (weighted ? "x,y,w\n" : "x,y\n");
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << format_double(data.x[i]) << ',' << format_double(data.y[i]);
        if (weighted) {
            out << ',' << format_double(data.w[i]);
        }
        out << '\n';
    }
}

ModelDocument ModelDocument::from_model(const SplineModel& model, double lambda, std::uint64_t seed,
                                        std::string method, json provenance) {
    ModelDocument doc;
    doc.a = model.grid().lower();
    doc.b = model.grid().upper();
    doc.knots.assign(model.grid().knots().begin(), model.grid().knots().end());
    doc.coefficients.assign(model.coefficients().begin(), model.coefficients().end());
    doc.lambda = lambda;
    doc.seed = seed;
    doc.method = std::move(method);
    doc.provenance = std::move(provenance);
    return doc;
}

SplineModel ModelDocument::to_model() const {
    if (schema != kModelSchema) {
        throw Error(ErrorKind::InvalidArgument, "unsupported model schema '" + schema + "'");
    }
    if (degree != 3) {
        throw Error(ErrorKind::InvalidArgument, "only cubic models are supported");
    }
    const int n = static_cast<int>(coefficients.size());
    KnotGrid grid = KnotGrid::uniform(a, b, n);
    if (knots.size() != grid.knots().size()) {
        throw Error(ErrorKind::InvalidArgument, "knot count does not match the coefficient count");
    }
    for (std::size_t k = 0; k < knots.size(); ++k) {
        if (std::abs(knots[k] - grid.knots()[k]) > 1e-12 * (1.0 + std::abs(knots[k]))) {
            throw Error(ErrorKind::InvalidArgument, "knots are not the uniform grid of the stated domain");
        }
    }
    Eigen::VectorXd c(n);
    for (int j = 0; j < n; ++j) {
        c[j] = coefficients[static_cast<std::size_t>(j)];
    }
    return SplineModel(std::move(grid), std::move(c));
}

json ModelDocument::to_json() const {
    json j;
    j["schema"] = schema;
    j["degree"] = degree;
    j["domain"] = json::array({a, b});
    j["knots"] = knots;
    j["coefficients"] = coefficients;
    j["lambda"] = lambda;
    j["seed"] = seed;
    j["method"] = method;
    j["provenance"] = provenance;
    return j;
}

ModelDocument ModelDocument::from_json(const json& j) {
    try {
        ModelDocument doc;
        doc.schema = j.at("schema").get<std::string>();
        doc.degree = j.at("degree").get<int>();
        const auto& domain = j.at("domain");
        if (!domain.is_array() || domain.size() != 2) {
            throw Error(ErrorKind::InvalidArgument, "domain must be [a, b]");
        }
        doc.a = domain[0].get<double>();
        doc.b = domain[1].get<double>();
        doc.knots = j.at("knots").get<std::vector<double>>();
        doc.coefficients = j.at("coefficients").get<std::vector<double>>();
        doc.lambda = j.at("lambda").get<double>();
        doc.seed = j.at("seed").get<std::uint64_t>();
        doc.method = j.at("method").get<std::string>();
        doc.provenance = j.value("provenance", json::object());
        return doc;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("malformed model document: ") + e.what());
    }
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, path.string() + ": " + e.what());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
    out << text;
}

json report_to_json(const FitReport& report, const SamplingState* state, bool include_timing) {
    json j;
    j["iterations"] = report.iterations;
    j["lambda"] = report.lambda_used;
    j["lambda_degenerate"] = report.lambda_degenerate;
    j["rmse"] = report.rmse;
    j["min_on_grid"] = report.min_on_grid;
    j["argmin_on_grid"] = report.argmin_on_grid;
    j["minimum"] = report.minimum;
    j["argminimum"] = report.argminimum;
    j["converged"] = report.converged;
    j["fixed_point"] = report.fixed_point;
    j["z_history"] = report.z_history;
    j["qp_iterations"] = report.qp_iterations;
    json cert = json::array();
    for (const CertifiedInterval& ci : report.certificate) {
        cert.push_back({{"lo", ci.interval.lo},
                        {"hi", ci.interval.hi},
                        {"certified", ci.certified},
                        {"forcing_bound", ci.forcing_bound},
                        {"lipschitz", ci.lipschitz},
                        {"width", ci.width}});
    }
    j["certificate"] = std::move(cert);
    if (state != nullptr) {
        std::vector<int> active(state->active.begin(), state->active.end());
        j["sampling"] = {{"points", state->points}, {"forcing", state->forcing}, {"active", active}};
    }
    if (include_timing) {
        j["timing_seconds"] = report.seconds;
    }
    return j;
}

void write_plot_csv(std::ostream& out, const SplineModel& model, int count, const std::function<double(double)>& truth) {
    const std::vector<double> xs = kernels::linspace(model.grid().lower(), model.grid().upper(), count);
    const std::vector<double> values = kernels::evaluate(model, xs, Execution::parallel);
    out << (truth ? "x,spline,truth\n" : "x,spline\n");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out << format_double(xs[i]) << ',' << format_double(values[i]);
        if (truth) {
            out << ',' << format_double(truth(xs[i]));
        }
        out << '\n';
    }
}

}  // namespace cpspline
