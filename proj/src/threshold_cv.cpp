#include "sce/threshold_cv.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sce/error.hpp"
#include "sce/parallel.hpp"

namespace sce {

namespace {

struct SplitEstimates {
    SymMatrix first;
    SymMatrix second;
};

std::vector<SplitEstimates> estimate_splits(const TimeSeriesPanel& panel, const std::vector<Split>& splits,
                                            MatrixKind kind) {
    std::vector<SplitEstimates> out(splits.size());
    std::vector<std::exception_ptr> errors(splits.size());
    parallel_for(splits.size(), [&](std::size_t v) {
        try {
            const auto& sp = splits[v];
            out[v].first = estimate(panel.slice_rows(sp.first.begin, sp.first.end), kind);
            out[v].second = estimate(panel.slice_rows(sp.second.begin, sp.second.end), kind);
        } catch (...) {
            errors[v] = std::current_exception();
        }
    });
    for (std::size_t v = 0; v < splits.size(); ++v) {
        if (!errors[v]) continue;
        try {
            std::rethrow_exception(errors[v]);
        } catch (const Error& e) {
            throw Error(e.kind(), "split " + std::to_string(v) + " (rows " +
                                      std::to_string(splits[v].first.begin) + ".." +
                                      std::to_string(splits[v].second.end) + "): " + e.what());
        }
    }
    return out;
}

double split_loss(const SplitEstimates& est, double s) {
    return frobenius_distance_sq(hard_threshold(est.first, s), est.second);
}

}  // namespace

void CvConfig::validate(std::size_t T) const {
    if (t1 == 0 || t2 == 0) throw Error(ErrorKind::InvalidArgument, "cv: t1 and t2 must be positive");
    if (n_splits == 0) throw Error(ErrorKind::InvalidArgument, "cv: n_splits must be positive");
    if (grid.empty()) throw Error(ErrorKind::InvalidArgument, "cv: threshold grid is empty");
    if (!(grid.front() >= 0.0)) throw Error(ErrorKind::InvalidArgument, "cv: thresholds must be nonnegative");
    for (std::size_t g = 1; g < grid.size(); ++g) {
        if (!(grid[g] > grid[g - 1])) throw Error(ErrorKind::InvalidArgument, "cv: grid must be strictly increasing");
    }
    if (t1 + t2 > T) {
        throw Error(ErrorKind::InsufficientData, "cv: t1 + t2 = " + std::to_string(t1 + t2) +
                                                     " exceeds T = " + std::to_string(T));
    }
}

CvConfig CvConfig::thirds(std::size_t T, std::size_t n_splits, std::vector<double> grid, std::uint64_t seed,
                          std::size_t segment) {
    const std::size_t seg = segment == 0 ? T : std::min(segment, T);
    CvConfig c;
    c.t1 = std::max<std::size_t>(2, seg / 3);
    c.t2 = seg - c.t1;
    c.n_splits = n_splits;
    c.grid = std::move(grid);
    c.seed = seed;
    return c;
}

nlohmann::json to_json(const CvResult& r) {
    return {{"grid", r.grid},          {"losses", r.losses}, {"selected", r.selected},
            {"seed", r.seed},          {"t1", r.t1},         {"t2", r.t2},
            {"n_splits", r.n_splits}};
}

std::vector<double> default_grid(const SymMatrix& full, std::size_t points) {
    if (points == 0) throw Error(ErrorKind::InvalidArgument, "cv: grid needs at least one point");
    double top = 0.0;
    for (std::size_t i = 0; i < full.dim(); ++i) {
        for (std::size_t j = i + 1; j < full.dim(); ++j) top = std::max(top, std::abs(full(i, j)));
    }
    if (points == 1 || top == 0.0) return {0.0};
    std::vector<double> g(points);
    for (std::size_t k = 0; k < points; ++k) {
        g[k] = top * static_cast<double>(k) / static_cast<double>(points - 1);
    }
    g.back() = top;
    return g;
}

std::vector<double> default_grid(const TimeSeriesPanel& panel, MatrixKind kind, std::size_t points) {
    return default_grid(estimate(panel, kind), points);
}

Split draw_split(std::size_t T, const CvConfig& cfg, std::size_t split_index) {
    if (cfg.t1 + cfg.t2 > T) {
        throw Error(ErrorKind::InsufficientData, "cv: t1 + t2 = " + std::to_string(cfg.t1 + cfg.t2) +
                                                     " exceeds T = " + std::to_string(T));
    }
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(split_index), 0x5eedc0deu};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::size_t> offset(0, T - cfg.t1 - cfg.t2);
    const std::size_t o = offset(rng);
    return {{o, o + cfg.t1}, {o + cfg.t1, o + cfg.t1 + cfg.t2}};
}

std::vector<Split> draw_splits(std::size_t T, const CvConfig& cfg) {
    std::vector<Split> out;
    out.reserve(cfg.n_splits);
    for (std::size_t v = 0; v < cfg.n_splits; ++v) out.push_back(draw_split(T, cfg, v));
    return out;
}

double empirical_loss(const TimeSeriesPanel& panel, double s, const std::vector<Split>& splits, MatrixKind kind) {
    if (!(s >= 0.0)) throw Error(ErrorKind::InvalidArgument, "cv: threshold must be nonnegative");
    if (splits.empty()) throw Error(ErrorKind::InvalidArgument, "cv: no splits");
    const auto est = estimate_splits(panel, splits, kind);
    double total = 0.0;
    for (const auto& e : est) total += split_loss(e, s);
    return total / static_cast<double>(est.size());
}

CvResult select_threshold(const TimeSeriesPanel& panel, const CvConfig& cfg, MatrixKind kind) {
    cfg.validate(panel.rows());
    const auto splits = draw_splits(panel.rows(), cfg);
    const auto est = estimate_splits(panel, splits, kind);

    CvResult r;
    r.grid = cfg.grid;
    r.seed = cfg.seed;
    r.t1 = cfg.t1;
    r.t2 = cfg.t2;
    r.n_splits = cfg.n_splits;
    r.per_split_losses.assign(est.size(), std::vector<double>(cfg.grid.size()));
    parallel_for(est.size(), [&](std::size_t v) {
        for (std::size_t g = 0; g < cfg.grid.size(); ++g) r.per_split_losses[v][g] = split_loss(est[v], cfg.grid[g]);
    });

    r.losses.assign(cfg.grid.size(), 0.0);
    for (std::size_t g = 0; g < cfg.grid.size(); ++g) {
        double total = 0.0;
        for (std::size_t v = 0; v < est.size(); ++v) total += r.per_split_losses[v][g];
        r.losses[g] = total / static_cast<double>(est.size());
    }
    std::size_t best = 0;
    for (std::size_t g = 1; g < r.losses.size(); ++g) {
        if (r.losses[g] <= r.losses[best]) best = g;
    }
    r.selected_index = best;
    r.selected = cfg.grid[best];
    return r;
}

}  // namespace sce
