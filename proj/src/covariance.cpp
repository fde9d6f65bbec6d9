#include "sce/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sce/error.hpp"
#include "sce/parallel.hpp"
#include "sce/simd/kernels.hpp"

namespace sce {

namespace {

std::vector<std::vector<double>> centered_columns(const TimeSeriesPanel& p) {
    std::vector<std::vector<double>> out(p.cols());
    for (std::size_t j = 0; j < p.cols(); ++j) {
        const auto c = p.column(j);
        const double mean = simd::sum(c) / static_cast<double>(c.size());
        out[j].resize(c.size());
        for (std::size_t t = 0; t < c.size(); ++t) out[j][t] = c[t] - mean;
    }
    return out;
}

bool is_constant(std::span<const double> c) {
    return std::all_of(c.begin(), c.end(), [&](double v) { return v == c.front(); });
}

void require_nonconstant(const TimeSeriesPanel& p) {
    for (std::size_t j = 0; j < p.cols(); ++j) {
        if (is_constant(p.column(j))) {
            throw Error(ErrorKind::DegenerateColumn, "degenerate (constant) column '" + p.labels()[j] + "'");
        }
    }
}

// Cross products of centered columns, one pair per task, mirrored.
SymMatrix cross_products(const std::vector<std::string>& labels,
                         const std::vector<std::vector<double>>& cols, double scale) {
    const std::size_t n = cols.size();
    std::vector<double> e(n * n);
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = simd::dot(cols[i], cols[j]) * scale;
            e[i * n + j] = v;
            e[j * n + i] = v;
        }
    });
    return SymMatrix(labels, std::move(e));
}

SymMatrix correlation_of(const std::vector<std::string>& labels, std::vector<std::vector<double>> cols) {
    for (auto& c : cols) {
        const double norm = std::sqrt(simd::dot(c, c));
        for (auto& v : c) v /= norm;
    }
    const SymMatrix raw = cross_products(labels, cols, 1.0);
    const std::size_t n = raw.dim();
    std::vector<double> e(raw.entries().begin(), raw.entries().end());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            e[i * n + j] = (i == j) ? 1.0 : std::clamp(e[i * n + j], -1.0, 1.0);
        }
    }
    return SymMatrix(labels, std::move(e));
}

}  // namespace

std::string_view to_string(MatrixKind kind) {
    return kind == MatrixKind::Covariance ? "covariance" : "spearman";
}

MatrixKind matrix_kind_from_string(std::string_view s) {
    if (s == "covariance") return MatrixKind::Covariance;
    if (s == "spearman") return MatrixKind::Spearman;
    throw Error(ErrorKind::InvalidArgument, "unknown matrix kind '" + std::string(s) + "'");
}

TimeSeriesPanel standardize(const TimeSeriesPanel& p) {
    require_nonconstant(p);
    auto cols = centered_columns(p);
    const double denom = static_cast<double>(p.rows() - 1);
    for (auto& c : cols) {
        const double sd = std::sqrt(simd::dot(c, c) / denom);
        for (auto& v : c) v /= sd;
    }
    return TimeSeriesPanel(p.labels(), std::move(cols), p.time_index());
}

SymMatrix sample_covariance(const TimeSeriesPanel& p) {
    if (p.rows() < 2) throw Error(ErrorKind::InsufficientData, "sample covariance needs T >= 2");
    return cross_products(p.labels(), centered_columns(p), 1.0 / static_cast<double>(p.rows()));
}

SymMatrix pearson_matrix(const TimeSeriesPanel& p) {
    require_nonconstant(p);
    return correlation_of(p.labels(), centered_columns(p));
}

std::vector<double> midranks(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t k = i;
        while (k + 1 < n && x[order[k + 1]] == x[order[i]]) ++k;
        // positions i..k (0-based) share rank ((i+1) + (k+1)) / 2
        const double rank = 0.5 * static_cast<double>(i + k + 2);
        for (std::size_t m = i; m <= k; ++m) r[order[m]] = rank;
        i = k + 1;
    }
    return r;
}

SymMatrix spearman_matrix(const TimeSeriesPanel& p) {
    if (p.rows() < 2) throw Error(ErrorKind::InsufficientData, "spearman needs T >= 2");
    require_nonconstant(p);
    std::vector<std::vector<double>> ranks(p.cols());
    parallel_for(p.cols(), [&](std::size_t j) {
        ranks[j] = midranks(p.column(j));
        // mean rank is exactly (T+1)/2
        const double mean = 0.5 * static_cast<double>(p.rows() + 1);
        for (auto& v : ranks[j]) v -= mean;
    });
    return correlation_of(p.labels(), std::move(ranks));
}

SymMatrix estimate(const TimeSeriesPanel& p, MatrixKind kind) {
    return kind == MatrixKind::Covariance ? sample_covariance(p) : spearman_matrix(p);
}

}  // namespace sce
