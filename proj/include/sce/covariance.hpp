#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "sce/panel.hpp"
#include "sce/sym_matrix.hpp"

namespace sce {

enum class MatrixKind { Covariance, Spearman };

std::string_view to_string(MatrixKind kind);
MatrixKind matrix_kind_from_string(std::string_view s);

/// Columns rescaled to mean 0 and sample standard deviation 1 (divisor T−1).
/// Throws DegenerateColumn naming the first constant column.
TimeSeriesPanel standardize(const TimeSeriesPanel& p);

/// T⁻¹ Σ_t (X_t − X̄)(X_t − X̄)ᵀ. Note the divisor is T, not T−1.
SymMatrix sample_covariance(const TimeSeriesPanel& p);

/// Unit-diagonal Pearson correlation.
SymMatrix pearson_matrix(const TimeSeriesPanel& p);

/// Pearson correlation of column midranks.
SymMatrix spearman_matrix(const TimeSeriesPanel& p);

/// 1-based ranks with ties sharing their average rank. O(n log n).
std::vector<double> midranks(std::span<const double> x);

/// Dispatches on kind: sample_covariance or spearman_matrix.
SymMatrix estimate(const TimeSeriesPanel& p, MatrixKind kind);

}  // namespace sce
