#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sce/csv.hpp"
#include "sce/error.hpp"
#include "sce/pipeline.hpp"

namespace sce {

namespace {

double score_with(std::vector<std::size_t>& set, std::size_t extra, const SymMatrix& reg) {
    set.push_back(extra);
    const double s = nz_score(set, reg);
    set.pop_back();
    return s;
}

bool contains(const std::vector<std::size_t>& v, std::size_t x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

// Step 2.2 on `order`, seeded with order.front().
std::vector<std::size_t> grow_forward(const std::vector<std::size_t>& order, const SymMatrix& reg,
                                      std::vector<std::size_t> set) {
    for (auto k : order) {
        if (contains(set, k)) continue;
        if (set.empty() || score_with(set, k, reg) >= nz_score(set, reg)) set.push_back(k);
    }
    return set;
}

ClusterResult finish(const ClusterInput& in, const std::vector<std::vector<std::size_t>>& local, bool overlapping,
                     const std::vector<std::string>& labels) {
    ClusterResult out;
    out.overlapping = overlapping;
    out.labels = labels;
    for (const auto& set : local) {
        out.scores.push_back(nz_score(set, in.regularized));
        std::vector<std::size_t> g;
        for (auto k : set) g.push_back(in.original[k]);
        out.sets.push_back(std::move(g));
    }
    return out;
}

std::vector<std::size_t> all_local(const ClusterInput& in) {
    std::vector<std::size_t> v(in.regularized.dim());
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

}  // namespace

double nz_score(std::span<const std::size_t> set, const SymMatrix& reg) {
    if (set.empty()) throw Error(ErrorKind::InvalidArgument, "nz_score: empty index set");
    std::size_t nonzero = 0;
    for (auto i : set) {
        if (i >= reg.dim()) throw Error(ErrorKind::InvalidArgument, "nz_score: index out of range");
        for (auto j : set) nonzero += reg(i, j) != 0.0 ? 1 : 0;
    }
    const auto n = static_cast<double>(set.size());
    return static_cast<double>(nonzero) / (n * n);
}

ClusterInput ClusterInput::from(const ScreenResult& s) {
    const std::size_t K = s.kept.size();
    std::vector<std::size_t> local(K);
    std::iota(local.begin(), local.end(), std::size_t{0});
    return {s.regularized.submatrix(local), s.response_corr, s.kept};
}

std::vector<std::size_t> rank_by_degree(std::span<const std::size_t> candidates, const ClusterInput& in) {
    std::vector<std::size_t> degree(in.regularized.dim(), 0);
    for (auto k : candidates) {
        for (auto j : candidates) degree[k] += in.regularized(k, j) != 0.0 ? 1 : 0;
    }
    std::vector<std::size_t> order(candidates.begin(), candidates.end());
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (degree[a] != degree[b]) return degree[a] > degree[b];
        const double ca = std::abs(in.response_corr[a]);
        const double cb = std::abs(in.response_corr[b]);
        if (ca != cb) return ca > cb;
        return in.original[a] < in.original[b];
    });
    return order;
}

ClusterResult cluster_forward(const ClusterInput& in, const std::vector<std::string>& labels) {
    std::vector<std::vector<std::size_t>> sets;
    std::vector<std::size_t> remaining = all_local(in);
    while (!remaining.empty()) {
        const auto order = rank_by_degree(remaining, in);
        auto set = grow_forward(order, in.regularized, {});
        std::erase_if(remaining, [&](std::size_t k) { return contains(set, k); });
        sets.push_back(std::move(set));
    }
    return finish(in, sets, false, labels);
}

ClusterResult cluster_backward(const ClusterInput& in, const std::vector<std::string>& labels) {
    const auto global_rank = rank_by_degree(all_local(in), in);
    std::vector<std::vector<std::size_t>> sets;
    std::vector<std::size_t> assigned;
    std::vector<std::size_t> remaining = all_local(in);
    while (!remaining.empty()) {
        const auto order = rank_by_degree(remaining, in);
        std::vector<std::size_t> set{order.front()};
        // Already-assigned variables may join the new set as well, scanned in
        // the global rank order before the unassigned ones.
        for (auto x : global_rank) {
            if (!contains(assigned, x)) continue;
            if (score_with(set, x, in.regularized) >= nz_score(set, in.regularized)) set.push_back(x);
        }
        set = grow_forward(order, in.regularized, std::move(set));
        for (auto k : set) {
            if (!contains(assigned, k)) assigned.push_back(k);
        }
        std::erase_if(remaining, [&](std::size_t k) { return contains(set, k); });
        sets.push_back(std::move(set));
    }
    return finish(in, sets, true, labels);
}

ClusterResult cluster_forward(const ScreenResult& s) { return cluster_forward(ClusterInput::from(s), s.labels); }
ClusterResult cluster_backward(const ScreenResult& s) { return cluster_backward(ClusterInput::from(s), s.labels); }

bool ModelSpec::is_additive() const {
    return std::all_of(groups.begin(), groups.end(), [](const auto& g) { return g.size() == 1; });
}

ModelSpec build_model_spec(const ScreenResult& screen, const ClusterResult& cluster) {
    std::vector<std::size_t> covered;
    for (const auto& g : cluster.sets) {
        if (g.empty()) throw Error(ErrorKind::InternalConsistency, "model spec: empty group");
        for (auto v : g) {
            if (!contains(covered, v)) covered.push_back(v);
        }
    }
    std::vector<std::size_t> kept = screen.kept;
    std::sort(covered.begin(), covered.end());
    std::sort(kept.begin(), kept.end());
    if (covered != kept) {
        throw Error(ErrorKind::InternalConsistency, "model spec: clusters do not cover the screened variables");
    }
    ModelSpec m;
    m.response = screen.response;
    m.labels = screen.labels;
    m.groups = cluster.sets;
    for (std::size_t a = 0; a < screen.kept.size(); ++a) m.sign_constraints[screen.kept[a]] = screen.response_signs[a];
    return m;
}

nlohmann::json to_json(const ClusterResult& c) {
    nlohmann::json sets = nlohmann::json::array();
    for (std::size_t s = 0; s < c.sets.size(); ++s) {
        std::vector<std::string> names;
        for (auto v : c.sets[s]) names.push_back(c.labels[v]);
        sets.push_back({{"indices", c.sets[s]}, {"labels", names}, {"score", c.scores[s]}});
    }
    return {{"overlapping", c.overlapping}, {"S", c.sets.size()}, {"sets", sets}};
}

nlohmann::json to_json(const ModelSpec& m) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : m.groups) {
        nlohmann::json vars = nlohmann::json::array();
        for (auto v : g) vars.push_back({{"index", v}, {"label", m.labels[v]}, {"sign", m.sign_of(v)}});
        groups.push_back(vars);
    }
    return {{"response", {{"index", m.response}, {"label", m.labels[m.response]}}},
            {"labels", m.labels},
            {"groups", groups}};
}

ModelSpec model_spec_from_json(const nlohmann::json& j) {
    try {
        ModelSpec m;
        m.labels = j.at("labels").get<std::vector<std::string>>();
        m.response = j.at("response").at("index").get<std::size_t>();
        for (const auto& g : j.at("groups")) {
            std::vector<std::size_t> group;
            for (const auto& v : g) {
                const auto idx = v.at("index").get<std::size_t>();
                group.push_back(idx);
                if (const int s = v.at("sign").get<int>(); s != 0) m.sign_constraints[idx] = s;
            }
            m.groups.push_back(std::move(group));
        }
        return m;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorKind::Parse, std::string("model spec JSON: ") + ex.what());
    }
}

std::string render_layout(const ClusterResult& c) {
    std::ostringstream out;
    out << (c.overlapping ? "backward (overlapping)" : "forward (disjoint)") << ", S = " << c.sets.size() << '\n';
    for (std::size_t s = 0; s < c.sets.size(); ++s) {
        out << 'A' << s + 1 << " (score " << csv::format_double(c.scores[s]) << "):";
        for (auto v : c.sets[s]) out << ' ' << c.labels[v];
        out << '\n';
    }
    return out.str();
}

}  // namespace sce
