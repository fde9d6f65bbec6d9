#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace sce {

/// Dense labeled symmetric matrix, row-major. Immutable after construction;
/// symmetry and label uniqueness are checked by the constructor.
class SymMatrix {
public:
    SymMatrix() = default;
    SymMatrix(std::vector<std::string> labels, std::vector<double> entries);

    static SymMatrix zeros(std::vector<std::string> labels);
    static SymMatrix identity(std::vector<std::string> labels);
    static SymMatrix diagonal(std::vector<std::string> labels, std::span<const double> diag);

    std::size_t dim() const noexcept { return labels_.size(); }
    double operator()(std::size_t i, std::size_t j) const { return entries_[i * dim() + j]; }
    std::span<const double> row(std::size_t i) const {
        return {entries_.data() + i * dim(), dim()};
    }
    std::span<const double> entries() const noexcept { return entries_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    /// Index of a label, or dim() when absent.
    std::size_t find(const std::string& label) const;

    /// Principal submatrix on `index` (in the given order).
    SymMatrix submatrix(std::span<const std::size_t> index) const;

    /// Relabeled matrix with out(i, j) = in(perm[i], perm[j]).
    SymMatrix permuted(std::span<const std::size_t> perm) const;

    bool operator==(const SymMatrix&) const = default;

private:
    std::vector<std::string> labels_;
    std::vector<double> entries_;
};

/// Membership parameters of the uniformity class: σ_ii ≤ M and
/// Σ_j |σ_ij|^q ≤ c0 for every row.
struct UniformityParams {
    double q = 0.0;
    double c0 = 1.0;
    double M = 1.0;

    void validate() const;
};

struct UniformityDiagnostics {
    double max_diag = 0.0;
    double max_row_q_norm = 0.0;

    bool within(const UniformityParams& p) const {
        return max_diag <= p.M && max_row_q_norm <= p.c0;
    }
};

std::vector<std::string> default_labels(std::size_t n, const std::string& prefix = "x");

/// Entrywise hard threshold: keeps m(i, j) when |m(i, j)| ≥ s, zero
/// otherwise. The diagonal is thresholded like every other entry.
SymMatrix hard_threshold(const SymMatrix& m, double s);

/// Ascending eigenvalues.
std::vector<double> eigenvalues(const SymMatrix& m);
double operator_norm(const SymMatrix& m);
double min_eigenvalue(const SymMatrix& m);
double frobenius_norm(const SymMatrix& m);

/// ‖a − b‖_F², labels ignored.
double frobenius_distance_sq(const SymMatrix& a, const SymMatrix& b);

/// Uses 0^0 = 0, so q = 0 counts nonzero entries per row.
UniformityDiagnostics uniformity_diagnostics(const SymMatrix& m, double q);

std::size_t nonzero_count(const SymMatrix& m);
bool is_diagonal(const SymMatrix& m);

// Serialization. CSV is a header row of labels followed by J numeric rows;
// numbers are written with 17 significant digits so the round trip is exact.
std::string to_csv(const SymMatrix& m);
SymMatrix sym_matrix_from_csv(std::istream& in);
nlohmann::json to_json(const SymMatrix& m);
SymMatrix sym_matrix_from_json(const nlohmann::json& j);

void write_csv_file(const SymMatrix& m, const std::string& path);
SymMatrix read_csv_file(const std::string& path);

}  // namespace sce
