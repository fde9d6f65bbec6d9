#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sce/covariance.hpp"
#include "sce/panel.hpp"

namespace sce {

/// Half-open row range [begin, end).
struct RowRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }
    bool operator==(const RowRange&) const = default;
};

/// One cross-validation split: the training segment Ω₁ immediately followed
/// by the validation segment Ω₂.
struct Split {
    RowRange first;
    RowRange second;

    bool operator==(const Split&) const = default;
};

struct CvConfig {
    std::size_t t1 = 0;
    std::size_t t2 = 0;
    std::size_t n_splits = 100;
    std::vector<double> grid;
    std::uint64_t seed = 0;

    /// Throws InvalidArgument on an empty/unsorted/negative grid or zero
    /// sizes, InsufficientData when t1 + t2 exceeds T.
    void validate(std::size_t T) const;

    /// t1 ≈ T/3 of a segment of length `segment` (defaults to all of T), t2 the rest.
    static CvConfig thirds(std::size_t T, std::size_t n_splits, std::vector<double> grid,
                           std::uint64_t seed, std::size_t segment = 0);
};

struct CvResult {
    std::vector<double> grid;
    std::vector<double> losses;
    double selected = 0.0;
    std::size_t selected_index = 0;
    std::vector<std::vector<double>> per_split_losses;  // [split][grid point]
    std::uint64_t seed = 0;
    std::size_t t1 = 0;
    std::size_t t2 = 0;
    std::size_t n_splits = 0;
};

nlohmann::json to_json(const CvResult& r);

/// `points` equally spaced thresholds from 0 to the largest absolute
/// off-diagonal entry of the full-sample estimate.
std::vector<double> default_grid(const TimeSeriesPanel& panel, MatrixKind kind, std::size_t points = 50);
std::vector<double> default_grid(const SymMatrix& full_estimate, std::size_t points = 50);

/// Consecutive segment at a uniformly drawn offset in {0, …, T − t1 − t2}.
/// Deterministic in (cfg.seed, split_index).
Split draw_split(std::size_t T, const CvConfig& cfg, std::size_t split_index);
std::vector<Split> draw_splits(std::size_t T, const CvConfig& cfg);

/// N⁻¹ Σ_v ‖T_s(Σ̂₁,v) − Σ̂₂,v‖_F².
double empirical_loss(const TimeSeriesPanel& panel, double s, const std::vector<Split>& splits,
                      MatrixKind kind);

/// Minimizes the empirical loss over cfg.grid with one shared set of
/// splits. Ties go to the larger threshold.
CvResult select_threshold(const TimeSeriesPanel& panel, const CvConfig& cfg, MatrixKind kind);

}  // namespace sce
