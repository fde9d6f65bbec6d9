#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sce/panel.hpp"
#include "sce/sym_matrix.hpp"
#include "sce/threshold_cv.hpp"

namespace sce {

struct CovStructure {
    enum class Kind { Diagonal, Block, Banded, RandomSparse };

    Kind kind = Kind::Diagonal;
    std::vector<std::size_t> block_sizes;  // Block
    double block_rho = 0.5;                // Block: within-block correlation
    std::size_t bandwidth = 1;             // Banded
    double decay = 0.5;                    // Banded: σ_ij = decay^|i−j| inside the band
    double density = 0.1;                  // RandomSparse: Bernoulli edge probability
    double q = 0.0;                        // sparsity exponent recorded in the model's params

    static CovStructure diagonal() { return {}; }
    static CovStructure block(std::vector<std::size_t> sizes, double rho = 0.5);
    static CovStructure banded(std::size_t bandwidth, double decay);
    static CovStructure random_sparse(double density);
};

std::string to_string(CovStructure::Kind kind);

struct SparseCovModel {
    SymMatrix sigma;
    UniformityParams params;
    CovStructure structure;
};

nlohmann::json to_json(const SparseCovModel& m);

struct DependenceSpec {
    enum class Kind { Iid, MDependent, Var1 };

    Kind kind = Kind::Iid;
    std::size_t m = 0;
    std::vector<double> coeff;  // Var1: J×J row-major

    static DependenceSpec iid() { return {}; }
    static DependenceSpec m_dependent(std::size_t m) { return {Kind::MDependent, m, {}}; }
    static DependenceSpec var1(std::vector<double> coeff) { return {Kind::Var1, 0, std::move(coeff)}; }

    /// Scaled identity A = rho·I, the simplest stable VAR(1) coefficient.
    static DependenceSpec var1_scaled_identity(std::size_t J, double rho);
};

nlohmann::json to_json(const DependenceSpec& d);

/// Positive definite, unit diagonal, min eigenvalue ≥ 0.1.
SparseCovModel make_sparse_cov(std::size_t J, const CovStructure& structure, std::uint64_t seed);

/// Largest |eigenvalue| of a general square matrix (row-major).
double spectral_radius(std::span<const double> a, std::size_t n);

/// Panel with marginal covariance model.sigma under the requested dependence.
/// iid and m_dependent(0) consume the random stream identically.
TimeSeriesPanel gen_panel(const SparseCovModel& model, const DependenceSpec& dep, std::size_t T,
                          std::uint64_t seed);

/// 1 for iid, min(m + 1, T) for m-dependent; NotApplicable for VAR(1).
double fractional_cover_size(const DependenceSpec& dep, std::size_t T);

struct CvTemplate {
    double segment_fraction = 2.0 / 3.0;  // Ω₁ ∪ Ω₂ length as a fraction of T
    double train_fraction = 1.0 / 3.0;    // Ω₁ length as a fraction of the segment
    std::size_t n_splits = 20;
    std::size_t grid_points = 50;
};

struct RateRow {
    std::size_t T = 0;
    double dependence = 0.0;  // m, or spectral radius for VAR(1)
    std::size_t rep = 0;
    double op_error = 0.0;
    double frob_error = 0.0;  // ‖·‖_F / √J
    double selected = 0.0;
};

struct RateSummary {
    std::size_t T = 0;
    double median_op_error = 0.0;
    double median_frob_error = 0.0;
    std::optional<double> theoretical_rate;  // absent for VAR(1)
};

struct RateReport {
    std::vector<RateRow> rows;
    std::vector<RateSummary> summary;
};

/// For each T and repetition: simulate, select the threshold by CV on the
/// sample covariance, and measure ‖T_ŝ(Σ̂) − Σ‖ against the model truth.
RateReport rate_experiment(const SparseCovModel& model, const DependenceSpec& dep,
                           const std::vector<std::size_t>& T_list, std::size_t n_reps,
                           const CvTemplate& cv, std::uint64_t seed);

std::string to_csv(const RateReport& r);
nlohmann::json to_json(const RateReport& r);

double median(std::vector<double> v);

}  // namespace sce
