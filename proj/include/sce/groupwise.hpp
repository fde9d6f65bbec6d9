#pragma once

// Groupwise multiple-index estimation, y ≈ Σ_s g_s(β_sᵀ x_{A_s}).
//
// The coefficient update follows the group-MAVE scheme. With the current
// indices V^i = (β_1ᵀx^i_{A_1}, …, β_Sᵀx^i_{A_S}):
//
//   (a) for every observation i a kernel-weighted local-linear fit
//       y^j ≈ a^i + Σ_s d^i_s (V^j_s − V^i_s), weights K_h(V^j − V^i),
//       gives the local level a^i and slopes d^i_s ≈ g_s'(V^i_s);
//   (b) with R^{ij} stacking d^i_s (x^j − x^i)_{A_s} over groups, the pooled
//       system H = Σ_ij K_h R^{ij}R^{ij}ᵀ, b = Σ_ij K_h (y^j − a^i) R^{ij}
//       gives the unconstrained update ζ = H⁻¹b;
//   (c) sign constraints sign(σ̃_kJ)·β_k ≥ 0 are imposed through
//       β = ζ + H⁻¹Λ′ (see sign_qp.hpp), then each group is rescaled to unit
//       norm.
//
// Singleton groups keep a pinned coefficient (±1) and enter (b) as a known
// offset. After the coefficients settle, the links are recovered by
// backfitting one-dimensional local-linear smoothers on the final indices.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sce/panel.hpp"
#include "sce/pipeline.hpp"

namespace sce {

struct FitConfig {
    enum class Bandwidth { RuleOfThumb, Fixed };

    Bandwidth bandwidth_rule = Bandwidth::RuleOfThumb;
    std::vector<double> fixed_bandwidth;  // one per group when Fixed
    double tolerance = 1e-6;
    std::size_t max_iter = 200;
    std::size_t link_grid_points = 100;

    void validate(std::size_t groups) const;
};

/// Product Gaussian kernel Π_d φ(u_d / h_d) / h_d.
double kernel_weight(std::span<const double> u, std::span<const double> h);

/// Local-linear estimate at `at` of the regression of y on x with a
/// Gaussian kernel of bandwidth h. Returns (level, slope).
std::pair<double, double> local_linear(std::span<const double> x, std::span<const double> y, double at, double h);

/// 1.06·sd·n^(−1/(4+dim)).
double rule_of_thumb_bandwidth(std::span<const double> v, std::size_t dim);

struct LinkTable {
    std::vector<double> v;
    std::vector<double> g;
};

struct IterationRecord {
    std::size_t iteration = 0;
    double objective = 0.0;   // kernel-weighted mean squared residual at the update
    double max_change = 0.0;  // max |Δβ| after normalization
    std::size_t active = 0;   // coordinates held at zero by the sign constraints
    bool rule_consistent = true;
    bool ridge = false;
    bool objective_increase = false;
};

/// Quantities of the last coefficient update, kept for auditing the
/// constrained step. Vectors are over the free (non-singleton) coefficients.
struct UpdateAudit {
    Eigen::MatrixXd H;
    Eigen::VectorXd b;
    Eigen::VectorXd zeta;
    Eigen::VectorXd beta;  // before per-group normalization
    Eigen::VectorXd lambda;
    std::vector<int> signs;
    std::vector<std::size_t> variables;  // panel column of each free coefficient
};

struct GroupwiseFit {
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::vector<double>> beta;
    std::vector<LinkTable> links;
    std::vector<std::vector<double>> lambda;  // per group, Λ′ diagonal (λ_k·sign_k)
    std::vector<double> bandwidths;
    std::size_t iterations = 0;
    bool converged = false;
    bool ridge_applied = false;
    double r_squared = 0.0;
    std::vector<IterationRecord> trace;
    UpdateAudit last_update;
};

GroupwiseFit fit(const TimeSeriesPanel& panel, const ModelSpec& spec, const FitConfig& cfg);

struct Prediction {
    double value = 0.0;
    bool extrapolated = false;
};

/// x holds one value per panel column (full row); only the columns used by
/// the model spec are read.
Prediction predict(const GroupwiseFit& fit, const ModelSpec& spec, std::span<const double> x);

/// 1 − SSE/SST of predict() on the panel rows.
double explained_variation(const GroupwiseFit& fit, const TimeSeriesPanel& panel, const ModelSpec& spec);

nlohmann::json to_json(const GroupwiseFit& fit, const ModelSpec& spec);
std::string links_to_csv(const GroupwiseFit& fit);

}  // namespace sce
