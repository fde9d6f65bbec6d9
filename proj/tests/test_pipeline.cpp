#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "oracles.hpp"
#include "sce/error.hpp"
#include "sce/pipeline.hpp"
#include "sce/process_sim.hpp"

using namespace sce;

namespace {

using Sets = std::vector<std::vector<std::size_t>>;

/// Dense blocks on the given partition; entries are positive and distinct.
ClusterInput block_input(const Sets& blocks, std::size_t K, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.2, 0.9);
    std::vector<double> e(K * K, 0.0);
    for (const auto& b : blocks)
        for (auto i : b)
            for (auto j : b) {
                if (i == j) e[i * K + i] = 1.0;
                else if (i < j) e[i * K + j] = e[j * K + i] = u(rng);
            }
    ClusterInput in;
    in.regularized = SymMatrix(default_labels(K), e);
    for (std::size_t k = 0; k < K; ++k) {
        in.response_corr.push_back(u(rng));
        in.original.push_back(k);
    }
    return in;
}

std::set<std::set<std::size_t>> as_set(const Sets& s) {
    std::set<std::set<std::size_t>> out;
    for (const auto& b : s) out.insert(std::set<std::size_t>(b.begin(), b.end()));
    return out;
}

Sets random_blocks(std::size_t K, std::mt19937_64& rng) {
    std::vector<std::size_t> perm(K);
    for (std::size_t i = 0; i < K; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    Sets blocks;
    std::uniform_int_distribution<std::size_t> size(1, 4);
    for (std::size_t i = 0; i < K;) {
        const std::size_t n = std::min(size(rng), K - i);
        blocks.emplace_back(perm.begin() + i, perm.begin() + i + n);
        i += n;
    }
    return blocks;
}

TimeSeriesPanel with_response(const TimeSeriesPanel& x, const std::vector<double>& y) {
    std::vector<std::vector<double>> cols;
    for (std::size_t j = 0; j < x.cols(); ++j) cols.emplace_back(x.column(j).begin(), x.column(j).end());
    cols.push_back(y);
    auto labels = x.labels();
    labels.push_back("y");
    return TimeSeriesPanel(labels, cols);
}

}  // namespace

TEST_CASE("nz_score examples") {
    const auto I = SymMatrix::identity(default_labels(3));
    const std::vector<std::size_t> one{1}, pair{0, 1}, all{0, 1, 2};
    CHECK(nz_score(one, I) == 1.0);
    CHECK(nz_score(pair, I) == 0.5);
    const SymMatrix dense(default_labels(3), {1, .5, .5, .5, 1, .5, .5, .5, 1});
    CHECK(nz_score(all, dense) == 1.0);
    CHECK_THROWS_AS(nz_score(std::vector<std::size_t>{}, I), Error);
}

TEST_CASE("rank_by_degree") {
    ClusterInput in;
    in.regularized = SymMatrix::identity(default_labels(3));
    in.response_corr = {0.2, -0.7, 0.5};
    in.original = {0, 1, 2};
    const std::vector<std::size_t> all{0, 1, 2};
    CHECK(rank_by_degree(all, in) == std::vector<std::size_t>{1, 2, 0});
    // A hub correlated with everything goes first despite a weak response link.
    in.regularized = SymMatrix(default_labels(3), {1, .3, .3, .3, 1, 0, .3, 0, 1});
    in.response_corr = {0.1, -0.7, 0.5};
    CHECK(rank_by_degree(all, in).front() == 0);
}

TEST_CASE("clustering on special matrices") {
    std::mt19937_64 rng(1);
    const auto labels = default_labels(5);
    const auto dense = block_input({{0, 1, 2, 3, 4}}, 5, rng);
    CHECK(cluster_forward(dense, labels).sets.size() == 1);
    CHECK(cluster_forward(dense, labels).sets[0].size() == 5);
    const auto diag = block_input({{0}, {1}, {2}, {3}, {4}}, 5, rng);
    CHECK(cluster_forward(diag, labels).sets.size() == 5);
    const auto single = block_input({{0}}, 1, rng);
    const auto b1 = cluster_backward(single, default_labels(1));
    CHECK(b1.overlapping);
    CHECK(b1.sets == Sets{{0}});
}

TEST_CASE("block recovery agrees with the partition enumeration oracle") {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t K = 3 + rep % 6;
        const auto blocks = random_blocks(K, rng);
        const auto in = block_input(blocks, K, rng);
        // Oracle: the coarsest partition whose every set scores 1.
        std::size_t best = K + 1;
        std::set<std::set<std::size_t>> best_partition;
        oracle::for_each_partition(K, [&](const Sets& p) {
            for (const auto& b : p)
                for (auto i : b)
                    for (auto j : b)
                        if (in.regularized(i, j) == 0.0) return;
            if (p.size() < best) {
                best = p.size();
                best_partition = as_set(p);
            }
        });
        CHECK(best_partition == as_set(blocks));
        const auto labels = default_labels(K);
        const auto f = cluster_forward(in, labels);
        CHECK(as_set(f.sets) == best_partition);
        CHECK_FALSE(f.overlapping);
        CHECK(as_set(cluster_backward(in, labels).sets) == best_partition);
    }
}

TEST_CASE("a bridge variable joins both sets in backward mode") {
    const std::vector<double> e{1, .5, .5, 0, 0,   //
                                .5, 1, .5, 0, 0,   //
                                .5, .5, 1, .5, .5,  //
                                0, 0, .5, 1, .5,   //
                                0, 0, .5, .5, 1};
    ClusterInput in;
    in.regularized = SymMatrix(default_labels(5), e);
    in.response_corr = {0.6, 0.5, 0.3, 0.4, 0.2};
    in.original = {0, 1, 2, 3, 4};
    const auto labels = default_labels(5);
    const auto f = cluster_forward(in, labels);
    CHECK(as_set(f.sets) == as_set({{0, 1, 2}, {3, 4}}));
    const auto b = cluster_backward(in, labels);
    CHECK(b.overlapping);
    CHECK(as_set(b.sets) == as_set({{0, 1, 2}, {2, 3, 4}}));
    for (const auto& s : b.sets) CHECK(nz_score(s, in.regularized) == 1.0);
    // Each forward set survives inside some backward set.
    for (const auto& home : f.sets) {
        const std::set<std::size_t> h(home.begin(), home.end());
        CHECK(std::any_of(b.sets.begin(), b.sets.end(), [&](const auto& s) {
            const std::set<std::size_t> bs(s.begin(), s.end());
            return std::includes(bs.begin(), bs.end(), h.begin(), h.end());
        }));
    }
}

TEST_CASE("admissions never lower the score") {
    std::mt19937_64 rng(3);
    std::bernoulli_distribution edge(0.4);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t K = 8;
        std::vector<double> e(K * K, 0.0);
        for (std::size_t i = 0; i < K; ++i) {
            e[i * K + i] = 1.0;
            for (std::size_t j = i + 1; j < K; ++j)
                if (edge(rng)) e[i * K + j] = e[j * K + i] = 0.3;
        }
        ClusterInput in;
        in.regularized = SymMatrix(default_labels(K), e);
        for (std::size_t k = 0; k < K; ++k) {
            in.response_corr.push_back(0.1 * (k + 1));
            in.original.push_back(k);
        }
        for (const auto& r : {cluster_forward(in, default_labels(K)), cluster_backward(in, default_labels(K))}) {
            std::set<std::size_t> covered;
            for (const auto& s : r.sets) {
                covered.insert(s.begin(), s.end());
                for (std::size_t n = 2; n <= s.size(); ++n) {
                    const std::span<const std::size_t> before(s.data(), n - 1), after(s.data(), n);
                    CHECK(nz_score(after, in.regularized) >= nz_score(before, in.regularized));
                }
            }
            CHECK(covered.size() == K);
        }
    }
}

TEST_CASE("screening keeps a duplicated response and rejects pure noise") {
    const auto model = make_sparse_cov(6, CovStructure::diagonal(), 0);
    const auto x = gen_panel(model, DependenceSpec::iid(), 300, 4);
    std::vector<double> y(x.column(0).begin(), x.column(0).end());
    const auto p = with_response(x, y);
    const auto s = screen(p, "y", CvConfig::thirds(300, 20, {}, 1, 200));
    CHECK(std::find(s.kept.begin(), s.kept.end(), 0) != s.kept.end());
    CHECK(s.kept.front() == 0);
    CHECK(s.regularized.dim() == s.kept.size() + 1);
    CHECK(s.response_signs.front() == 1);

    std::vector<double> noise(x.column(5).begin(), x.column(5).end());
    const auto q = with_response(x.select_columns(std::vector<std::size_t>{0, 1, 2, 3, 4}), noise);
    try {
        screen_at(q, "y", 0.9);
        FAIL("expected empty screen");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyScreen);
    }
    CHECK_THROWS_AS(screen_at(q, "missing", 0.1), Error);
}

TEST_CASE("model spec shapes and serialization") {
    const auto model = make_sparse_cov(4, CovStructure::block({2, 2}, 0.7), 0);
    const auto x = gen_panel(model, DependenceSpec::iid(), 400, 2);
    std::vector<double> y(400);
    for (std::size_t t = 0; t < 400; ++t) y[t] = x(t, 0) + x(t, 1) - x(t, 2) - x(t, 3);
    const auto p = with_response(x, y);
    const auto s = screen_at(p, "y", 0.2);
    REQUIRE(s.size() == 4);
    const auto c = cluster_forward(s);
    const auto spec = build_model_spec(s, c);
    CHECK(spec.groups.size() == 2);
    CHECK(as_set(spec.groups) == as_set({{0, 1}, {2, 3}}));
    CHECK(spec.sign_of(0) == 1);
    CHECK(spec.sign_of(2) == -1);
    CHECK_FALSE(spec.is_additive());
    CHECK_FALSE(spec.is_single_index());
    const auto back = model_spec_from_json(nlohmann::json::parse(to_json(spec).dump()));
    CHECK(back.groups == spec.groups);
    CHECK(back.sign_constraints == spec.sign_constraints);
    CHECK(back.response == spec.response);
    CHECK(render_layout(c).find("\nA1 (score 1):") != std::string::npos);
    CHECK(cluster_backward(s).sets.size() == 2);

    ClusterResult partial = c;
    partial.sets.pop_back();
    CHECK_THROWS_AS(build_model_spec(s, partial), Error);
    ClusterResult singles = c;
    singles.sets = {{0}, {1}, {2}, {3}};
    CHECK(build_model_spec(s, singles).is_additive());
    singles.sets = {{0, 1, 2, 3}};
    CHECK(build_model_spec(s, singles).is_single_index());
}
