#include "sce/groupwise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sce/csv.hpp"
#include "sce/error.hpp"
#include "sce/parallel.hpp"
#include "sce/sign_qp.hpp"
#include "sce/simd/kernels.hpp"

namespace sce {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr std::size_t kNoSlot = static_cast<std::size_t>(-1);
constexpr std::size_t kBackfitIter = 50;
constexpr double kBackfitTol = 1e-10;

using Vec = std::vector<double>;

// Where each coefficient lives: multi-variable groups own free slots in the
// pooled system, singleton groups are pinned.
struct Layout {
    std::vector<std::vector<std::size_t>> slot;  // [group][member] → free slot or kNoSlot
    std::vector<std::size_t> free_var;
    std::vector<std::size_t> free_group;
    std::vector<int> free_sign;
};

Layout make_layout(const ModelSpec& spec) {
    Layout L;
    for (std::size_t s = 0; s < spec.groups.size(); ++s) {
        std::vector<std::size_t> slots;
        for (auto v : spec.groups[s]) {
            if (spec.groups[s].size() == 1) {
                slots.push_back(kNoSlot);
                continue;
            }
            slots.push_back(L.free_var.size());
            L.free_var.push_back(v);
            L.free_group.push_back(s);
            L.free_sign.push_back(spec.sign_of(v));
        }
        L.slot.push_back(std::move(slots));
    }
    return L;
}

double sd(std::span<const double> v) {
    const double n = static_cast<double>(v.size());
    const double mean = simd::sum(v) / n;
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / (n - 1.0));
}

// Solves the symmetric system, adding a trace-scaled ridge when it is
// numerically singular. Returns true when the ridge was needed.
bool solve_symmetric(Eigen::MatrixXd& A, const Eigen::VectorXd& rhs, Eigen::VectorXd& out, double ridge_scale) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
    const double lmin = es.eigenvalues()(0);
    bool ridge = false;
    if (!(lmax > 0.0) || lmin <= 1e-12 * lmax) {
        const double tr = std::max(A.trace(), 1e-300);
        A += ridge_scale * tr * Eigen::MatrixXd::Identity(A.rows(), A.cols());
        ridge = true;
    }
    out = A.ldlt().solve(rhs);
    return ridge;
}

// Kernel-weighted least squares of r on [1, regressors] with weights w.
// Returns the coefficient vector (level first).
Eigen::VectorXd weighted_linear(const Vec& w, const std::vector<Vec>& regressors, std::span<const double> r,
                                Vec& scratch) {
    const std::size_t p = regressors.size();
    Eigen::MatrixXd A(p + 1, p + 1);
    Eigen::VectorXd rhs(p + 1);
    A(0, 0) = simd::sum(w);
    rhs(0) = simd::dot(w, r);
    for (std::size_t a = 0; a < p; ++a) {
        scratch = regressors[a];
        for (std::size_t j = 0; j < w.size(); ++j) scratch[j] *= w[j];
        A(0, a + 1) = A(a + 1, 0) = simd::sum(scratch);
        rhs(a + 1) = simd::dot(scratch, r);
        for (std::size_t c = a; c < p; ++c) A(a + 1, c + 1) = A(c + 1, a + 1) = simd::dot(scratch, regressors[c]);
    }
    Eigen::VectorXd coef;
    solve_symmetric(A, rhs, coef, 1e-10);
    return coef;
}

// Row l such that the local-linear level at `at` equals l·y.
void smoother_row(std::span<const double> x, double at, double h, std::span<double> row) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x[j] - at;
        const double w = std::exp(-0.5 * (d / h) * (d / h));
        row[j] = w;
        s0 += w;
        s1 += w * d;
        s2 += w * d * d;
    }
    const double det = s0 * s2 - s1 * s1;
    if (!(s0 > 0.0)) {
        std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(x.size()));
        return;
    }
    if (!(det > 1e-12 * s0 * s2)) {
        for (auto& w : row) w /= s0;
        return;
    }
    for (std::size_t j = 0; j < x.size(); ++j) row[j] *= (s2 - s1 * (x[j] - at)) / det;
}

Eigen::MatrixXd smoother_matrix(std::span<const double> x, std::span<const double> points, double h) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> S(points.size(), x.size());
    parallel_for(points.size(), [&](std::size_t i) {
        smoother_row(x, points[i], h, {S.row(static_cast<Eigen::Index>(i)).data(), x.size()});
    });
    return S;
}

double apply_row(const Eigen::MatrixXd& S, Eigen::Index i, const Vec& y) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < S.cols(); ++j) acc += S(i, j) * y[static_cast<std::size_t>(j)];
    return acc;
}

struct Indices {
    std::vector<Vec> v;  // [group][t]
};

Indices compute_indices(const TimeSeriesPanel& panel, const ModelSpec& spec, const std::vector<Vec>& beta) {
    Indices out;
    for (std::size_t s = 0; s < spec.groups.size(); ++s) {
        Vec v(panel.rows(), 0.0);
        for (std::size_t m = 0; m < spec.groups[s].size(); ++m) simd::axpy(beta[s][m], panel.column(spec.groups[s][m]), v);
        out.v.push_back(std::move(v));
    }
    return out;
}

std::vector<double> bandwidths_for(const Indices& idx, const FitConfig& cfg, std::size_t T) {
    if (cfg.bandwidth_rule == FitConfig::Bandwidth::Fixed) return cfg.fixed_bandwidth;
    std::vector<double> h;
    for (const auto& v : idx.v) {
        double b = rule_of_thumb_bandwidth(v, idx.v.size());
        if (!(b > 0.0)) b = std::pow(static_cast<double>(T), -1.0 / (4.0 + static_cast<double>(idx.v.size())));
        h.push_back(b);
    }
    return h;
}

// Signs pinned on singleton coefficients and the orientation rule for
// unconstrained groups (largest |β| positive).
void orient(std::vector<double>& b, const std::vector<std::size_t>& members, const ModelSpec& spec) {
    bool constrained = false;
    for (auto v : members) constrained = constrained || spec.sign_of(v) != 0;
    if (constrained) return;
    std::size_t arg = 0;
    for (std::size_t m = 1; m < b.size(); ++m) {
        if (std::abs(b[m]) > std::abs(b[arg])) arg = m;
    }
    if (b[arg] < 0.0) {
        for (auto& x : b) x = -x;
    }
}

bool normalize(std::vector<double>& b) {
    double n = 0.0;
    for (double x : b) n += x * x;
    n = std::sqrt(n);
    if (!(n > 0.0)) return false;
    for (auto& x : b) x /= n;
    return true;
}

// Starting directions from the outer product of local-linear gradients in
// the joint predictor space.
std::vector<Vec> initial_beta(const TimeSeriesPanel& panel, const ModelSpec& spec, std::span<const double> y) {
    std::vector<std::size_t> vars;
    for (const auto& g : spec.groups) {
        for (auto v : g) {
            if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
        }
    }
    const std::size_t T = panel.rows();
    const std::size_t p = vars.size();
    std::vector<double> h(p);
    for (std::size_t d = 0; d < p; ++d) {
        h[d] = rule_of_thumb_bandwidth(panel.column(vars[d]), p);
        if (!(h[d] > 0.0)) h[d] = 1.0;
    }

    std::vector<Eigen::MatrixXd> outer(T);
    parallel_for(T, [&](std::size_t i) {
        Vec w(T, 0.0), scratch;
        std::vector<Vec> dx(p, Vec(T));
        for (std::size_t d = 0; d < p; ++d) {
            const auto col = panel.column(vars[d]);
            for (std::size_t j = 0; j < T; ++j) dx[d][j] = col[j] - col[i];
        }
        for (std::size_t j = 0; j < T; ++j) {
            double e = 0.0;
            for (std::size_t d = 0; d < p; ++d) e += (dx[d][j] / h[d]) * (dx[d][j] / h[d]);
            w[j] = std::exp(-0.5 * e);
        }
        const Eigen::VectorXd coef = weighted_linear(w, dx, y, scratch);
        const Eigen::VectorXd grad = coef.tail(static_cast<Eigen::Index>(p));
        outer[i] = grad * grad.transpose();
    });
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (const auto& o : outer) G += o;

    std::vector<Vec> beta;
    for (const auto& g : spec.groups) {
        Vec b(g.size());
        if (g.size() == 1) {
            const int s = spec.sign_of(g.front());
            b[0] = s < 0 ? -1.0 : 1.0;
            beta.push_back(b);
            continue;
        }
        const auto k = static_cast<Eigen::Index>(g.size());
        Eigen::MatrixXd block(k, k);
        std::vector<Eigen::Index> pos;
        for (auto v : g) pos.push_back(static_cast<Eigen::Index>(std::find(vars.begin(), vars.end(), v) - vars.begin()));
        for (Eigen::Index a = 0; a < k; ++a) {
            for (Eigen::Index c = 0; c < k; ++c) block(a, c) = G(pos[a], pos[c]);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block);
        const Eigen::VectorXd lead = es.eigenvectors().col(k - 1);
        for (Eigen::Index a = 0; a < k; ++a) b[static_cast<std::size_t>(a)] = lead(a);
        if (!(es.eigenvalues()(k - 1) > 0.0)) {
            // Degenerate gradients: fall back to the cross-covariance with y.
            for (std::size_t a = 0; a < g.size(); ++a) b[a] = simd::dot(panel.column(g[a]), y);
        }

        double agreement = 0.0;
        bool constrained = false;
        for (std::size_t a = 0; a < g.size(); ++a) {
            agreement += spec.sign_of(g[a]) * b[a];
            constrained = constrained || spec.sign_of(g[a]) != 0;
        }
        if (constrained) {
            if (agreement < 0.0) {
                for (auto& x : b) x = -x;
            }
            for (std::size_t a = 0; a < g.size(); ++a) {
                if (spec.sign_of(g[a]) * b[a] < 0.0) b[a] = 0.0;
            }
            if (!normalize(b)) {
                for (std::size_t a = 0; a < g.size(); ++a) b[a] = spec.sign_of(g[a]);
            }
        } else {
            orient(b, g, spec);
        }
        normalize(b);
        beta.push_back(std::move(b));
    }
    return beta;
}

struct PooledSystem {
    Eigen::MatrixXd H;
    Eigen::VectorXd b;
    double weighted_sq = 0.0;  // Σ w r²
    double weight_total = 0.0;
};

// Steps (a) and (b): local-linear fits at every observation and the pooled
// coefficient system.
PooledSystem pooled_system(const TimeSeriesPanel& panel, const ModelSpec& spec, const Layout& layout,
                           const std::vector<Vec>& beta, const Indices& idx, const std::vector<double>& h,
                           std::span<const double> y) {
    const std::size_t T = panel.rows();
    const std::size_t S = spec.groups.size();
    const std::size_t P = layout.free_var.size();
    double norm = 1.0;
    for (double hs : h) norm *= kInvSqrt2Pi / hs;

    std::vector<PooledSystem> parts(T);
    parallel_for(T, [&](std::size_t i) {
        Vec w(T), scratch;
        std::vector<Vec> dv(S, Vec(T));
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t j = 0; j < T; ++j) dv[s][j] = idx.v[s][j] - idx.v[s][i];
        }
        for (std::size_t j = 0; j < T; ++j) {
            double e = 0.0;
            for (std::size_t s = 0; s < S; ++s) e += (dv[s][j] / h[s]) * (dv[s][j] / h[s]);
            w[j] = norm * std::exp(-0.5 * e);
        }
        const Eigen::VectorXd coef = weighted_linear(w, dv, y, scratch);
        const double a = coef(0);

        // Residual target y^j − a^i minus the pinned singleton contributions.
        Vec r(T);
        for (std::size_t j = 0; j < T; ++j) r[j] = y[j] - a;
        std::vector<Vec> dx(P, Vec(T));
        for (std::size_t s = 0; s < S; ++s) {
            const double d = coef(static_cast<Eigen::Index>(s + 1));
            for (std::size_t m = 0; m < spec.groups[s].size(); ++m) {
                const auto col = panel.column(spec.groups[s][m]);
                const std::size_t slot = layout.slot[s][m];
                if (slot == kNoSlot) {
                    simd::axpy(-d * beta[s][m], col, r);
                    for (std::size_t j = 0; j < T; ++j) r[j] += d * beta[s][m] * col[i];
                    continue;
                }
                // R^{ij} component: d^i_s (x^j − x^i)
                for (std::size_t j = 0; j < T; ++j) dx[slot][j] = d * (col[j] - col[i]);
            }
        }
        PooledSystem& part = parts[i];
        part.H = Eigen::MatrixXd(P, P);
        part.b = Eigen::VectorXd(P);
        for (std::size_t p = 0; p < P; ++p) {
            scratch = dx[p];
            for (std::size_t j = 0; j < T; ++j) scratch[j] *= w[j];
            part.b(static_cast<Eigen::Index>(p)) = simd::dot(scratch, r);
            for (std::size_t q = p; q < P; ++q) {
                const double v = simd::dot(scratch, dx[q]);
                part.H(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) = v;
                part.H(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(p)) = v;
            }
        }
        scratch = r;
        for (std::size_t j = 0; j < T; ++j) scratch[j] *= w[j];
        part.weighted_sq = simd::dot(scratch, r);
        part.weight_total = simd::sum(w);
    });

    PooledSystem total;
    total.H = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(P));
    total.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(P));
    for (const auto& part : parts) {
        total.H += part.H;
        total.b += part.b;
        total.weighted_sq += part.weighted_sq;
        total.weight_total += part.weight_total;
    }
    return total;
}

// Backfits centered one-dimensional links on the final indices and
// tabulates them; the first link carries the intercept.
std::vector<LinkTable> backfit_links(const Indices& idx, std::span<const double> y, std::size_t grid_points) {
    const std::size_t S = idx.v.size();
    const std::size_t T = y.size();
    const double ybar = simd::sum(y) / static_cast<double>(T);
    std::vector<double> h(S);
    std::vector<Eigen::MatrixXd> train(S);
    std::vector<Vec> grid(S);
    for (std::size_t s = 0; s < S; ++s) {
        h[s] = rule_of_thumb_bandwidth(idx.v[s], 1);
        if (!(h[s] > 0.0)) h[s] = 1.0;
        train[s] = smoother_matrix(idx.v[s], idx.v[s], h[s]);
        const auto [lo, hi] = std::minmax_element(idx.v[s].begin(), idx.v[s].end());
        grid[s].resize(grid_points);
        for (std::size_t k = 0; k < grid_points; ++k) {
            grid[s][k] = grid_points == 1 ? *lo
                                          : *lo + (*hi - *lo) * static_cast<double>(k) / static_cast<double>(grid_points - 1);
        }
        if (grid_points > 1) grid[s].back() = *hi;
    }

    std::vector<Vec> g(S, Vec(T, 0.0));
    std::vector<double> centre(S, 0.0);
    Vec partial(T);
    auto partial_residual = [&](std::size_t s) {
        for (std::size_t t = 0; t < T; ++t) {
            double acc = y[t] - ybar;
            for (std::size_t o = 0; o < S; ++o) {
                if (o != s) acc -= g[o][t];
            }
            partial[t] = acc;
        }
    };
    const std::size_t sweeps = S == 1 ? 1 : kBackfitIter;
    for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
        double change = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            partial_residual(s);
            Vec next(T);
            for (std::size_t t = 0; t < T; ++t) next[t] = apply_row(train[s], static_cast<Eigen::Index>(t), partial);
            centre[s] = simd::sum(next) / static_cast<double>(T);
            for (std::size_t t = 0; t < T; ++t) {
                next[t] -= centre[s];
                change = std::max(change, std::abs(next[t] - g[s][t]));
            }
            g[s] = std::move(next);
        }
        if (change < kBackfitTol) break;
    }

    std::vector<LinkTable> links(S);
    for (std::size_t s = 0; s < S; ++s) {
        partial_residual(s);
        const Eigen::MatrixXd G = smoother_matrix(idx.v[s], grid[s], h[s]);
        links[s].v = grid[s];
        links[s].g.resize(grid_points);
        for (std::size_t k = 0; k < grid_points; ++k) {
            links[s].g[k] = apply_row(G, static_cast<Eigen::Index>(k), partial) - centre[s] + (s == 0 ? ybar : 0.0);
        }
    }
    return links;
}

double interpolate(const LinkTable& link, double v, bool& extrapolated) {
    const auto& xs = link.v;
    const auto& gs = link.g;
    if (xs.size() == 1) {
        extrapolated = extrapolated || v != xs.front();
        return gs.front();
    }
    if (v < xs.front() || v > xs.back()) {
        extrapolated = true;
        const bool left = v < xs.front();
        const std::size_t a = left ? 0 : xs.size() - 2;
        const double slope = (gs[a + 1] - gs[a]) / (xs[a + 1] - xs[a]);
        return left ? gs.front() + slope * (v - xs.front()) : gs.back() + slope * (v - xs.back());
    }
    const auto it = std::upper_bound(xs.begin(), xs.end(), v);
    std::size_t k = static_cast<std::size_t>(it - xs.begin());
    if (k == xs.size()) k = xs.size() - 1;
    const std::size_t a = k - 1;
    const double span = xs[k] - xs[a];
    if (!(span > 0.0)) return gs[a];
    const double t = (v - xs[a]) / span;
    return gs[a] + t * (gs[k] - gs[a]);
}

void validate_spec(const TimeSeriesPanel& panel, const ModelSpec& spec) {
    if (spec.groups.empty()) throw Error(ErrorKind::InvalidArgument, "fit: model has no groups");
    if (spec.response >= panel.cols()) throw Error(ErrorKind::InvalidArgument, "fit: response index out of range");
    std::size_t coefficients = 0;
    for (const auto& g : spec.groups) {
        if (g.empty()) throw Error(ErrorKind::InvalidArgument, "fit: empty group");
        for (auto v : g) {
            if (v >= panel.cols()) throw Error(ErrorKind::InvalidArgument, "fit: variable index out of range");
            if (v == spec.response) throw Error(ErrorKind::InvalidArgument, "fit: response used as a predictor");
        }
        coefficients += g.size();
    }
    if (panel.rows() <= coefficients) {
        throw Error(ErrorKind::InsufficientData, "fit: need more observations than coefficients");
    }
}

}  // namespace

void FitConfig::validate(std::size_t groups) const {
    if (!(tolerance > 0.0)) throw Error(ErrorKind::InvalidArgument, "fit: tolerance must be positive");
    if (max_iter == 0) throw Error(ErrorKind::InvalidArgument, "fit: max_iter must be at least 1");
    if (link_grid_points < 2) throw Error(ErrorKind::InvalidArgument, "fit: link grid needs at least 2 points");
    if (bandwidth_rule == Bandwidth::Fixed) {
        if (fixed_bandwidth.size() != groups) throw Error(ErrorKind::InvalidArgument, "fit: need one fixed bandwidth per group");
        for (double h : fixed_bandwidth) {
            if (!(h > 0.0)) throw Error(ErrorKind::InvalidArgument, "fit: bandwidths must be positive");
        }
    }
}

double kernel_weight(std::span<const double> u, std::span<const double> h) {
    if (u.size() != h.size()) throw Error(ErrorKind::InvalidArgument, "kernel_weight: dimension mismatch");
    double w = 1.0;
    for (std::size_t d = 0; d < u.size(); ++d) {
        if (!(h[d] > 0.0)) throw Error(ErrorKind::InvalidArgument, "kernel_weight: bandwidth must be positive");
        const double z = u[d] / h[d];
        w *= kInvSqrt2Pi * std::exp(-0.5 * z * z) / h[d];
    }
    return w;
}

std::pair<double, double> local_linear(std::span<const double> x, std::span<const double> y, double at, double h) {
    if (x.size() != y.size() || x.empty()) throw Error(ErrorKind::InvalidArgument, "local_linear: size mismatch");
    if (!(h > 0.0)) throw Error(ErrorKind::InvalidArgument, "local_linear: bandwidth must be positive");
    Vec w(x.size()), scratch;
    std::vector<Vec> d{Vec(x.size())};
    for (std::size_t j = 0; j < x.size(); ++j) {
        d[0][j] = x[j] - at;
        w[j] = std::exp(-0.5 * (d[0][j] / h) * (d[0][j] / h));
    }
    const Eigen::VectorXd coef = weighted_linear(w, d, y, scratch);
    return {coef(0), coef(1)};
}

double rule_of_thumb_bandwidth(std::span<const double> v, std::size_t dim) {
    return 1.06 * sd(v) * std::pow(static_cast<double>(v.size()), -1.0 / (4.0 + static_cast<double>(dim)));
}

GroupwiseFit fit(const TimeSeriesPanel& panel, const ModelSpec& spec, const FitConfig& cfg) {
    validate_spec(panel, spec);
    cfg.validate(spec.groups.size());
    const auto y = panel.column(spec.response);
    if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); })) {
        throw Error(ErrorKind::DegenerateResponse, "fit: response is constant");
    }
    const Layout layout = make_layout(spec);
    const std::size_t S = spec.groups.size();
    const std::size_t T = panel.rows();

    GroupwiseFit out;
    out.groups = spec.groups;
    std::vector<Vec> beta = initial_beta(panel, spec, y);
    out.lambda.resize(S);
    for (std::size_t s = 0; s < S; ++s) out.lambda[s].assign(spec.groups[s].size(), 0.0);

    Indices idx = compute_indices(panel, spec, beta);
    std::vector<double> h = bandwidths_for(idx, cfg, T);
    double previous_objective = std::numeric_limits<double>::infinity();

    if (layout.free_var.empty()) out.converged = true;  // nothing to estimate beyond the links
    for (std::size_t iter = 1; iter <= cfg.max_iter && !layout.free_var.empty(); ++iter) {
        PooledSystem sys = pooled_system(panel, spec, layout, beta, idx, h, y);

        IterationRecord rec;
        rec.iteration = iter;
        Eigen::VectorXd unused;
        Eigen::MatrixXd H = sys.H;
        rec.ridge = solve_symmetric(H, sys.b, unused, 1e-8);
        out.ridge_applied = out.ridge_applied || rec.ridge;
        const auto sol = solve_sign_constrained(H, sys.b, layout.free_sign);
        rec.active = static_cast<std::size_t>(std::count(sol.active.begin(), sol.active.end(), true));
        rec.rule_consistent = sol.rule_consistent;
        rec.objective = (sys.weighted_sq - 2.0 * sys.b.dot(sol.beta) + sol.beta.dot(sys.H * sol.beta)) / sys.weight_total;
        rec.objective_increase = rec.objective > previous_objective + 1e-10 * std::max(1.0, std::abs(previous_objective));
        previous_objective = rec.objective;

        out.last_update = {H, sys.b, sol.zeta, sol.beta, Eigen::VectorXd::Zero(sol.beta.size()), layout.free_sign, layout.free_var};
        std::vector<Vec> next = beta;
        for (std::size_t p = 0; p < layout.free_var.size(); ++p) {
            const std::size_t s = layout.free_group[p];
            const auto pe = static_cast<Eigen::Index>(p);
            for (std::size_t m = 0; m < spec.groups[s].size(); ++m) {
                if (layout.slot[s][m] == p) {
                    next[s][m] = sol.beta(pe);
                    out.lambda[s][m] = sol.lambda(pe) * layout.free_sign[p];
                }
            }
            out.last_update.lambda(pe) = sol.lambda(pe);
        }
        double change = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            if (spec.groups[s].size() == 1) continue;
            if (!normalize(next[s])) next[s] = beta[s];
            orient(next[s], spec.groups[s], spec);
            for (std::size_t m = 0; m < next[s].size(); ++m) change = std::max(change, std::abs(next[s][m] - beta[s][m]));
        }
        rec.max_change = change;
        out.trace.push_back(rec);
        out.iterations = iter;
        beta = std::move(next);
        idx = compute_indices(panel, spec, beta);
        h = bandwidths_for(idx, cfg, T);
        if (change < cfg.tolerance) {
            out.converged = true;
            break;
        }
    }

    out.beta = beta;
    out.bandwidths = h;
    out.links = backfit_links(idx, y, cfg.link_grid_points);
    out.r_squared = explained_variation(out, panel, spec);
    return out;
}

Prediction predict(const GroupwiseFit& fit, const ModelSpec& spec, std::span<const double> x) {
    if (x.size() != spec.labels.size()) {
        throw Error(ErrorKind::InvalidArgument, "predict: expected " + std::to_string(spec.labels.size()) +
                                                    " values, got " + std::to_string(x.size()));
    }
    if (fit.groups != spec.groups) throw Error(ErrorKind::InvalidArgument, "predict: fit does not match the model spec");
    Prediction out;
    for (std::size_t s = 0; s < fit.groups.size(); ++s) {
        double v = 0.0;
        for (std::size_t m = 0; m < fit.groups[s].size(); ++m) v += fit.beta[s][m] * x[fit.groups[s][m]];
        out.value += interpolate(fit.links[s], v, out.extrapolated);
    }
    return out;
}

double explained_variation(const GroupwiseFit& fit, const TimeSeriesPanel& panel, const ModelSpec& spec) {
    const auto y = panel.column(spec.response);
    const double ybar = simd::sum(y) / static_cast<double>(y.size());
    double sse = 0.0, sst = 0.0;
    Vec row(panel.cols());
    for (std::size_t t = 0; t < panel.rows(); ++t) {
        for (std::size_t j = 0; j < panel.cols(); ++j) row[j] = panel(t, j);
        const double e = y[t] - predict(fit, spec, row).value;
        sse += e * e;
        sst += (y[t] - ybar) * (y[t] - ybar);
    }
    if (!(sst > 0.0)) throw Error(ErrorKind::DegenerateResponse, "explained variation: response has zero variance");
    return 1.0 - sse / sst;
}

nlohmann::json to_json(const GroupwiseFit& fit, const ModelSpec& spec) {
    nlohmann::json groups = nlohmann::json::array();
    for (std::size_t s = 0; s < fit.groups.size(); ++s) {
        nlohmann::json coefs = nlohmann::json::array();
        for (std::size_t m = 0; m < fit.groups[s].size(); ++m) {
            coefs.push_back({{"label", spec.labels[fit.groups[s][m]]},
                             {"beta", fit.beta[s][m]},
                             {"lambda", fit.lambda[s][m]}});
        }
        groups.push_back({{"coefficients", coefs}, {"bandwidth", fit.bandwidths[s]}});
    }
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& r : fit.trace) {
        trace.push_back({{"iteration", r.iteration},
                         {"objective", r.objective},
                         {"max_change", r.max_change},
                         {"active", r.active},
                         {"rule_consistent", r.rule_consistent},
                         {"ridge", r.ridge},
                         {"objective_increase", r.objective_increase}});
    }
    return {{"groups", groups},
            {"iterations", fit.iterations},
            {"converged", fit.converged},
            {"ridge_applied", fit.ridge_applied},
            {"r_squared", fit.r_squared},
            {"trace", trace}};
}

std::string links_to_csv(const GroupwiseFit& fit) {
    std::ostringstream out;
    out << "group,v,g_hat\n";
    for (std::size_t s = 0; s < fit.links.size(); ++s) {
        for (std::size_t k = 0; k < fit.links[s].v.size(); ++k) {
            out << s + 1 << ',' << csv::format_double(fit.links[s].v[k]) << ',' << csv::format_double(fit.links[s].g[k])
                << '\n';
        }
    }
    return out.str();
}

}  // namespace sce
