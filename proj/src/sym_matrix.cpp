#include "sce/sym_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <Eigen/Dense>

#include "sce/csv.hpp"
#include "sce/error.hpp"
#include "sce/simd/kernels.hpp"

namespace sce {

SymMatrix::SymMatrix(std::vector<std::string> labels, std::vector<double> entries)
    : labels_(std::move(labels)), entries_(std::move(entries)) {
    const std::size_t n = labels_.size();
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "SymMatrix: dimension must be positive");
    if (entries_.size() != n * n) {
        throw Error(ErrorKind::InvalidArgument, "SymMatrix: expected " + std::to_string(n * n) +
                                                    " entries, got " +
                                                    std::to_string(entries_.size()));
    }
    std::unordered_set<std::string> seen;
    for (const auto& l : labels_) {
        if (!seen.insert(l).second) {
            throw Error(ErrorKind::InvalidArgument, "SymMatrix: duplicate label '" + l + "'");
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (entries_[i * n + j] != entries_[j * n + i]) {
                throw Error(ErrorKind::InvalidArgument,
                            "SymMatrix: asymmetric entries at (" + std::to_string(i) + ", " +
                                std::to_string(j) + ")");
            }
        }
    }
}

SymMatrix SymMatrix::zeros(std::vector<std::string> labels) {
    const std::size_t n = labels.size();
    return SymMatrix(std::move(labels), std::vector<double>(n * n, 0.0));
}

SymMatrix SymMatrix::identity(std::vector<std::string> labels) {
    const std::vector<double> ones(labels.size(), 1.0);
    return diagonal(std::move(labels), ones);
}

SymMatrix SymMatrix::diagonal(std::vector<std::string> labels, std::span<const double> diag) {
    const std::size_t n = labels.size();
    if (diag.size() != n) throw Error(ErrorKind::InvalidArgument, "SymMatrix: diagonal length");
    std::vector<double> e(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) e[i * n + i] = diag[i];
    return SymMatrix(std::move(labels), std::move(e));
}

std::size_t SymMatrix::find(const std::string& label) const {
    const auto it = std::find(labels_.begin(), labels_.end(), label);
    return static_cast<std::size_t>(it - labels_.begin());
}

SymMatrix SymMatrix::submatrix(std::span<const std::size_t> index) const {
    const std::size_t k = index.size();
    std::vector<std::string> labels;
    labels.reserve(k);
    std::vector<double> e(k * k);
    for (std::size_t a = 0; a < k; ++a) {
        if (index[a] >= dim()) throw Error(ErrorKind::InvalidArgument, "submatrix: index out of range");
        labels.push_back(labels_[index[a]]);
        for (std::size_t b = 0; b < k; ++b) e[a * k + b] = (*this)(index[a], index[b]);
    }
    return SymMatrix(std::move(labels), std::move(e));
}

SymMatrix SymMatrix::permuted(std::span<const std::size_t> perm) const {
    if (perm.size() != dim()) throw Error(ErrorKind::InvalidArgument, "permuted: length mismatch");
    std::vector<bool> hit(dim(), false);
    for (auto p : perm) {
        if (p >= dim() || hit[p]) throw Error(ErrorKind::InvalidArgument, "permuted: not a permutation");
        hit[p] = true;
    }
    return submatrix(perm);
}

void UniformityParams::validate() const {
    if (!(q >= 0.0 && q < 1.0)) throw Error(ErrorKind::InvalidArgument, "uniformity: q must lie in [0, 1)");
    if (!(c0 > 0.0)) throw Error(ErrorKind::InvalidArgument, "uniformity: c0 must be positive");
    if (!(M > 0.0)) throw Error(ErrorKind::InvalidArgument, "uniformity: M must be positive");
}

std::vector<std::string> default_labels(std::size_t n, const std::string& prefix) {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i + 1));
    return out;
}

SymMatrix hard_threshold(const SymMatrix& m, double s) {
    if (!(s >= 0.0)) throw Error(ErrorKind::InvalidArgument, "hard_threshold: s must be nonnegative");
    std::vector<double> e(m.entries().begin(), m.entries().end());
    for (auto& v : e) {
        if (!(std::abs(v) >= s)) v = 0.0;
    }
    return SymMatrix(m.labels(), std::move(e));
}

std::vector<double> eigenvalues(const SymMatrix& m) {
    const auto n = static_cast<Eigen::Index>(m.dim());
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        a(m.entries().data(), n, n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
    const auto& ev = solver.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

double operator_norm(const SymMatrix& m) {
    const auto ev = eigenvalues(m);
    return std::max(std::abs(ev.front()), std::abs(ev.back()));
}

double min_eigenvalue(const SymMatrix& m) { return eigenvalues(m).front(); }

double frobenius_norm(const SymMatrix& m) { return std::sqrt(simd::dot(m.entries(), m.entries())); }

double frobenius_distance_sq(const SymMatrix& a, const SymMatrix& b) {
    if (a.dim() != b.dim()) throw Error(ErrorKind::InvalidArgument, "frobenius distance: dimension mismatch");
    return simd::sq_diff_sum(a.entries(), b.entries());
}

UniformityDiagnostics uniformity_diagnostics(const SymMatrix& m, double q) {
    if (!(q >= 0.0 && q < 1.0)) throw Error(ErrorKind::InvalidArgument, "uniformity: q must lie in [0, 1)");
    UniformityDiagnostics d;
    d.max_diag = m(0, 0);
    for (std::size_t i = 0; i < m.dim(); ++i) {
        d.max_diag = std::max(d.max_diag, m(i, i));
        double row = 0.0;
        for (double v : m.row(i)) {
            if (v != 0.0) row += (q == 0.0) ? 1.0 : std::pow(std::abs(v), q);
        }
        d.max_row_q_norm = std::max(d.max_row_q_norm, row);
    }
    return d;
}

std::size_t nonzero_count(const SymMatrix& m) {
    return static_cast<std::size_t>(
        std::count_if(m.entries().begin(), m.entries().end(), [](double v) { return v != 0.0; }));
}

bool is_diagonal(const SymMatrix& m) {
    for (std::size_t i = 0; i < m.dim(); ++i) {
        for (std::size_t j = 0; j < m.dim(); ++j) {
            if (i != j && m(i, j) != 0.0) return false;
        }
    }
    return true;
}

std::string to_csv(const SymMatrix& m) {
    std::ostringstream out;
    for (std::size_t i = 0; i < m.dim(); ++i) out << (i ? "," : "") << m.labels()[i];
    out << '\n';
    for (std::size_t i = 0; i < m.dim(); ++i) {
        for (std::size_t j = 0; j < m.dim(); ++j) out << (j ? "," : "") << csv::format_double(m(i, j));
        out << '\n';
    }
    return out.str();
}

SymMatrix sym_matrix_from_csv(std::istream& in) {
    const auto table = csv::read(in);
    const std::size_t n = table.header.size();
    if (table.rows.size() != n) {
        throw Error(ErrorKind::Parse, "matrix CSV: expected " + std::to_string(n) + " rows, got " +
                                          std::to_string(table.rows.size()));
    }
    std::vector<double> e;
    e.reserve(n * n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) e.push_back(csv::parse_cell(table.rows[r][c], r + 1, table.header[c]));
    }
    return SymMatrix(table.header, std::move(e));
}

nlohmann::json to_json(const SymMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.dim(); ++i) {
        rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    }
    return {{"labels", m.labels()}, {"entries", rows}};
}

SymMatrix sym_matrix_from_json(const nlohmann::json& j) {
    try {
        auto labels = j.at("labels").get<std::vector<std::string>>();
        std::vector<double> e;
        for (const auto& row : j.at("entries")) {
            if (row.size() != labels.size()) throw Error(ErrorKind::Parse, "matrix JSON: ragged rows");
            for (const auto& v : row) e.push_back(v.get<double>());
        }
        return SymMatrix(std::move(labels), std::move(e));
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorKind::Parse, std::string("matrix JSON: ") + ex.what());
    }
}

void write_csv_file(const SymMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    out << to_csv(m);
}

SymMatrix read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
    return sym_matrix_from_csv(in);
}

}  // namespace sce
