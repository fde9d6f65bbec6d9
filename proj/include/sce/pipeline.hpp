#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sce/panel.hpp"
#include "sce/sym_matrix.hpp"
#include "sce/threshold_cv.hpp"

namespace sce {

/// Step 1 output. Indices refer to panel columns.
struct ScreenResult {
    double threshold = 0.0;
    CvResult cv;
    std::size_t response = 0;
    std::vector<std::string> labels;  // all panel labels
    std::vector<std::size_t> kept;    // ordered by |σ̃_kJ| descending
    SymMatrix regularized;            // T_ŝ(Σ̂) on kept (in order) followed by the response
    std::vector<double> response_corr;  // σ̃_kJ for k in kept
    std::vector<int> response_signs;    // sign(σ̃_kJ) ∈ {−1, +1}

    std::size_t size() const noexcept { return kept.size(); }
};

/// Threshold the Spearman matrix of the standardized panel at the
/// CV-selected level and keep the variables with a nonzero entry against the
/// response. An empty cv.grid means the default grid. Throws EmptyScreen
/// when nothing survives.
ScreenResult screen(const TimeSeriesPanel& panel, const std::string& response_label, CvConfig cv);

/// Same as screen() with a fixed threshold (no cross-validation).
ScreenResult screen_at(const TimeSeriesPanel& panel, const std::string& response_label, double threshold);

/// Fraction of nonzero entries of the principal submatrix on `set`,
/// diagonal included.
double nz_score(std::span<const std::size_t> set, const SymMatrix& regularized);

/// The clustering works on the K×K regularized block of the kept
/// variables. Local index k corresponds to panel column original[k].
struct ClusterInput {
    SymMatrix regularized;
    std::vector<double> response_corr;
    std::vector<std::size_t> original;

    static ClusterInput from(const ScreenResult& s);
};

/// Local indices from `candidates` by nonzero degree within the candidate
/// block (descending), then |σ̃_kJ| descending, then original index ascending.
std::vector<std::size_t> rank_by_degree(std::span<const std::size_t> candidates, const ClusterInput& in);

struct ClusterResult {
    std::vector<std::vector<std::size_t>> sets;  // panel columns, in admission order
    bool overlapping = false;
    std::vector<double> scores;
    std::vector<std::string> labels;  // all panel labels
};

ClusterResult cluster_forward(const ClusterInput& in, const std::vector<std::string>& labels);
ClusterResult cluster_backward(const ClusterInput& in, const std::vector<std::string>& labels);
ClusterResult cluster_forward(const ScreenResult& s);
ClusterResult cluster_backward(const ScreenResult& s);

/// Semiparametric model y ≈ Σ_s g_s(β_sᵀ x_{A_s}). Indices are panel columns.
struct ModelSpec {
    std::size_t response = 0;
    std::vector<std::string> labels;
    std::vector<std::vector<std::size_t>> groups;
    std::map<std::size_t, int> sign_constraints;  // 0 or missing = unconstrained

    int sign_of(std::size_t var) const {
        const auto it = sign_constraints.find(var);
        return it == sign_constraints.end() ? 0 : it->second;
    }
    bool is_additive() const;
    bool is_single_index() const { return groups.size() == 1; }
};

ModelSpec build_model_spec(const ScreenResult& screen, const ClusterResult& cluster);

nlohmann::json to_json(const ScreenResult& s);
nlohmann::json to_json(const ClusterResult& c);
nlohmann::json to_json(const ModelSpec& m);
ModelSpec model_spec_from_json(const nlohmann::json& j);

/// One line per set: "A1 (score 1): x3 x7 x9".
std::string render_layout(const ClusterResult& c);

}  // namespace sce
