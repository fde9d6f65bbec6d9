#include "sce/sign_qp.hpp"

#include <cmath>
#include <limits>

#include "sce/error.hpp"

namespace sce {

namespace {

// Minimizer with the coordinates in `fixed` pinned to zero.
Eigen::VectorXd solve_free(const Eigen::MatrixXd& H, const Eigen::VectorXd& b, const std::vector<bool>& fixed) {
    const Eigen::Index n = H.rows();
    std::vector<Eigen::Index> free;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (!fixed[static_cast<std::size_t>(k)]) free.push_back(k);
    }
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    if (free.empty()) return x;
    const auto m = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd Hf(m, m);
    Eigen::VectorXd bf(m);
    for (Eigen::Index a = 0; a < m; ++a) {
        bf(a) = b(free[a]);
        for (Eigen::Index c = 0; c < m; ++c) Hf(a, c) = H(free[a], free[c]);
    }
    const Eigen::VectorXd xf = Hf.ldlt().solve(bf);
    for (Eigen::Index a = 0; a < m; ++a) x(free[a]) = xf(a);
    return x;
}

}  // namespace

SignConstrainedSolution solve_sign_constrained(const Eigen::MatrixXd& H, const Eigen::VectorXd& b,
                                               std::span<const int> signs) {
    const Eigen::Index n = H.rows();
    if (H.cols() != n || b.size() != n || static_cast<Eigen::Index>(signs.size()) != n) {
        throw Error(ErrorKind::InvalidArgument, "sign-constrained solve: dimension mismatch");
    }
    SignConstrainedSolution out;
    out.zeta = H.ldlt().solve(b);
    out.lambda = Eigen::VectorXd::Zero(n);
    out.active.assign(static_cast<std::size_t>(n), false);

    auto violates = [&](const Eigen::VectorXd& x, Eigen::Index k) {
        return signs[static_cast<std::size_t>(k)] != 0 && signs[static_cast<std::size_t>(k)] * x(k) < 0.0;
    };

    bool feasible = true;
    for (Eigen::Index k = 0; k < n; ++k) feasible = feasible && !violates(out.zeta, k);
    if (feasible) {
        out.beta = out.zeta;
        return out;
    }

    // Primal active set from the feasible point β = 0 on every constrained
    // coordinate (free coordinates at their conditional optimum).
    std::vector<bool>& fixed = out.active;
    for (Eigen::Index k = 0; k < n; ++k) fixed[static_cast<std::size_t>(k)] = signs[static_cast<std::size_t>(k)] != 0;
    Eigen::VectorXd x = solve_free(H, b, fixed);

    const int max_iter = 10 * static_cast<int>(n) + 50;
    for (; out.iterations < max_iter; ++out.iterations) {
        const Eigen::VectorXd target = solve_free(H, b, fixed);
        bool target_feasible = true;
        for (Eigen::Index k = 0; k < n; ++k) target_feasible = target_feasible && !violates(target, k);

        if (target_feasible) {
            x = target;
            const Eigen::VectorXd grad = H * x - b;
            Eigen::Index worst = -1;
            double worst_lambda = 0.0;
            for (Eigen::Index k = 0; k < n; ++k) {
                if (!fixed[static_cast<std::size_t>(k)]) continue;
                const double lam = signs[static_cast<std::size_t>(k)] * grad(k);
                if (lam < worst_lambda - 1e-12 * (1.0 + std::abs(b(k)))) {
                    worst_lambda = lam;
                    worst = k;
                }
            }
            if (worst < 0) break;
            fixed[static_cast<std::size_t>(worst)] = false;
            continue;
        }

        // Walk toward the target until the first constrained coordinate hits zero.
        double alpha = 1.0;
        Eigen::Index blocking = -1;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (fixed[static_cast<std::size_t>(k)] || !violates(target, k)) continue;
            const double step = x(k) / (x(k) - target(k));
            if (step < alpha) {
                alpha = step;
                blocking = k;
            }
        }
        x += alpha * (target - x);
        if (blocking >= 0) {
            fixed[static_cast<std::size_t>(blocking)] = true;
            x(blocking) = 0.0;
        }
    }

    for (Eigen::Index k = 0; k < n; ++k) {
        if (fixed[static_cast<std::size_t>(k)]) x(k) = 0.0;
    }
    out.beta = x;
    const Eigen::VectorXd grad = H * x - b;
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        if (fixed[ku]) out.lambda(k) = std::max(0.0, signs[ku] * grad(k));
        const bool agreed = signs[ku] == 0 || signs[ku] * out.zeta(k) >= 0.0;
        if (agreed && out.lambda(k) > 0.0) out.rule_consistent = false;
    }
    return out;
}

}  // namespace sce
