#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace sce {

/// Solution of min ½βᵀHβ − bᵀβ subject to sign_k·β_k ≥ 0 for every k with
/// sign_k ≠ 0. H must be symmetric positive definite.
///
/// The KKT conditions give Hβ − b = Λ′ with Λ′_k = λ_k·sign_k, λ_k ≥ 0 and
/// λ_k·β_k = 0, i.e. β = ζ + H⁻¹Λ′ where ζ = H⁻¹b is the unconstrained
/// solution. Coordinates held at the bound are exactly zero.
struct SignConstrainedSolution {
    Eigen::VectorXd zeta;    // unconstrained H⁻¹b
    Eigen::VectorXd beta;    // constrained minimizer
    Eigen::VectorXd lambda;  // λ_k ≥ 0
    std::vector<bool> active;
    bool rule_consistent = true;  // λ_k = 0 wherever sign(ζ_k) already agreed
    int iterations = 0;
};

SignConstrainedSolution solve_sign_constrained(const Eigen::MatrixXd& H, const Eigen::VectorXd& b,
                                               std::span<const int> signs);

}  // namespace sce
