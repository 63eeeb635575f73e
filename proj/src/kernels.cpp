#include "cpspline/kernels.hpp"

#include "cpspline/error.hpp"

#include <algorithm>
#include <array>
#include <limits>

namespace cpspline::kernels {

void evaluate(const SplineModel& model, std::span<const double> xs, std::span<double> out, Execution exec) {
    if (out.size() != xs.size()) {
        throw Error(ErrorKind::InvalidArgument, "evaluate: output size mismatch");
    }
    const auto count = static_cast<std::ptrdiff_t>(xs.size());
    if (exec == Execution::serial) {
        for (std::ptrdiff_t i = 0; i < count; ++i) {
            out[static_cast<std::size_t>(i)] = model.value(xs[static_cast<std::size_t>(i)]);
        }
        return;
    }
    // Exceptions may not leave an OpenMP region; validate up front instead.
    for (double x : xs) {
        if (!model.grid().contains(x)) {
            model.value(x);
        }
    }
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] = model.value(xs[static_cast<std::size_t>(i)]);
    }
}

std::vector<double> evaluate(const SplineModel& model, std::span<const double> xs, Execution exec) {
    std::vector<double> out(xs.size());
    evaluate(model, xs, out, exec);
    return out;
}

std::vector<double> uniform_points(const KnotGrid& grid, int per_interval) {
    if (per_interval < 1) {
        throw Error(ErrorKind::InvalidArgument, "grid density must be >= 1");
    }
    const int intervals = grid.num_intervals();
    std::vector<double> xs;
    xs.reserve(static_cast<std::size_t>(intervals * per_interval + 1));
    const double a = grid.lower();
    const double h = grid.spacing();
    for (int k = 0; k < intervals; ++k) {
        for (int t = 0; t < per_interval; ++t) {
            xs.push_back(a + (k + static_cast<double>(t) / per_interval) * h);
        }
    }
    xs.push_back(grid.upper());
    return xs;
}

std::vector<double> linspace(double a, double b, int count) {
    if (count < 2) {
        throw Error(ErrorKind::InvalidArgument, "linspace needs at least two points");
    }
    std::vector<double> xs(static_cast<std::size_t>(count));
    const double step = (b - a) / (count - 1);
    for (int i = 0; i < count; ++i) {
        xs[static_cast<std::size_t>(i)] = a + i * step;
    }
    xs.back() = b;
    return xs;
}

NormalAccumulation accumulate_normal(std::span<const LocalBasis> rows, std::span<const double> y,
                                     std::span<const double> w, int n, Execution exec) {
    if (rows.size() != y.size() || rows.size() != w.size()) {
        throw Error(ErrorKind::InvalidArgument, "accumulate_normal: size mismatch");
    }
    NormalAccumulation acc{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};

    if (exec == Execution::serial) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const LocalBasis& row = rows[i];
            for (int r = 0; r < 4; ++r) {
                const double wr = w[i] * row.values[static_cast<std::size_t>(r)];
                acc.rhs[row.first + r] += wr * y[i];
                for (int c = 0; c < 4; ++c) {
                    acc.gram(row.first + r, row.first + c) += wr * row.values[static_cast<std::size_t>(c)];
                }
            }
        }
        return acc;
    }

    // Bucket data indices by first column (counting sort keeps data order).
    const int buckets = n - 3;
    std::vector<std::size_t> offsets(static_cast<std::size_t>(buckets + 1), 0);
    for (const LocalBasis& row : rows) {
        ++offsets[static_cast<std::size_t>(row.first + 1)];
    }
    for (int b = 0; b < buckets; ++b) {
        offsets[static_cast<std::size_t>(b + 1)] += offsets[static_cast<std::size_t>(b)];
    }
    // Rows regrouped bucket by bucket so every pass below reads memory in order.
    std::vector<std::array<double, 4>> wv(rows.size());
    std::vector<double> wy(rows.size());
    std::vector<double> weight(rows.size());
    {
        std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const std::size_t o = cursor[static_cast<std::size_t>(rows[i].first)]++;
            wv[o] = rows[i].values;
            wy[o] = w[i] * y[i];
            weight[o] = w[i];
        }
    }

#pragma omp parallel for schedule(static)
    for (int j = 0; j < n; ++j) {
        const int first_bucket = std::max(0, j - 3);
        const int last_bucket = std::min(j, buckets - 1);
        double rhs = 0.0;
        double gram[7] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};  // columns j-3 .. j+3
        for (int b = first_bucket; b <= last_bucket; ++b) {
            const auto r = static_cast<std::size_t>(j - b);
            for (std::size_t o = offsets[static_cast<std::size_t>(b)]; o < offsets[static_cast<std::size_t>(b + 1)];
                 ++o) {
                const double wr = weight[o] * wv[o][r];
                rhs += wv[o][r] * wy[o];
                for (int c = 0; c < 4; ++c) {
                    gram[b + c - j + 3] += wr * wv[o][static_cast<std::size_t>(c)];
                }
            }
        }
        acc.rhs[j] = rhs;
        for (int k = 0; k < 7; ++k) {
            const int c = j + k - 3;
            if (c >= 0 && c < n) {
                acc.gram(j, c) = gram[k];
            }
        }
    }
    return acc;
}

std::pair<std::size_t, double> argmin(std::span<const double> values) {
    std::size_t best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] < best_value) {
            best_value = values[i];
            best = i;
        }
    }
    return {best, best_value};
}

}  // namespace cpspline::kernels
