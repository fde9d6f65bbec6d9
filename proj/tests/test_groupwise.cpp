#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sce/error.hpp"
#include "sce/groupwise.hpp"

using namespace sce;

namespace {

struct Data {
    TimeSeriesPanel panel;
    ModelSpec spec;
};

/// Predictors x1..xK (iid normal) plus response y = f(x).
template <class F>
Data make_data(std::size_t T, std::size_t K, std::uint64_t seed, double noise, F f,
               std::vector<std::vector<std::size_t>> groups) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    std::vector<std::vector<double>> cols(K + 1, std::vector<double>(T));
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> x(K);
        for (std::size_t k = 0; k < K; ++k) x[k] = cols[k][t] = n(rng);
        cols[K][t] = f(x) + noise * n(rng);
    }
    auto labels = default_labels(K);
    labels.push_back("y");
    Data d{TimeSeriesPanel(labels, cols), {}};
    d.spec.response = K;
    d.spec.labels = labels;
    d.spec.groups = std::move(groups);
    return d;
}

std::vector<double> row(const TimeSeriesPanel& p, std::size_t t) {
    std::vector<double> r(p.cols());
    for (std::size_t j = 0; j < p.cols(); ++j) r[j] = p(t, j);
    return r;
}

}  // namespace

TEST_CASE("kernel weight") {
    const double phi0 = 1.0 / std::sqrt(2.0 * M_PI);
    const std::vector<double> zero2{0, 0}, h2{0.5, 2.0};
    CHECK(kernel_weight(zero2, h2) == doctest::Approx(phi0 * phi0 / (0.5 * 2.0)));
    const std::vector<double> u{1}, h{1}, mu{-1};
    CHECK(kernel_weight(u, h) == doctest::Approx(0.24197).epsilon(1e-5));
    CHECK(kernel_weight(u, h) == kernel_weight(mu, h));
    const std::vector<double> bad{0.0};
    CHECK_THROWS_AS(kernel_weight(u, bad), Error);
}

TEST_CASE("local linear reproduces a line") {
    const std::vector<double> x{0, 1, 2, 3, 4}, y{1, 3, 5, 7, 9};
    const auto [level, slope] = local_linear(x, y, 2.5, 0.7);
    CHECK(level == doctest::Approx(6.0));
    CHECK(slope == doctest::Approx(2.0));
}

TEST_CASE("noiseless linear single index") {
    const std::vector<double> truth{0.5, -0.3, 0.8};
    auto d = make_data(200, 3, 1, 0.0, [&](const std::vector<double>& x) {
        return truth[0] * x[0] + truth[1] * x[1] + truth[2] * x[2];
    }, {{0, 1, 2}});
    const auto f = fit(d.panel, d.spec, FitConfig{});
    // Least-squares oracle direction.
    oracle::Dense XtX(3, std::vector<double>(3, 0.0));
    std::vector<double> Xty(3, 0.0);
    for (std::size_t t = 0; t < 200; ++t)
        for (std::size_t i = 0; i < 3; ++i) {
            Xty[i] += d.panel(t, i) * d.panel(t, 3);
            for (std::size_t j = 0; j < 3; ++j) XtX[i][j] += d.panel(t, i) * d.panel(t, j);
        }
    const auto ols = oracle::solve(XtX, Xty);
    CHECK(oracle::angle_degrees(f.beta[0], ols) < 0.1);
    CHECK(f.r_squared > 0.9999);
    CHECK(f.converged);
    double norm = 0.0;
    for (double b : f.beta[0]) norm += b * b;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-14));
    for (std::size_t t = 0; t < 200; t += 17) {
        const auto p = predict(f, d.spec, row(d.panel, t));
        CHECK(std::abs(p.value - d.panel(t, 3)) < 1e-6);
    }
    CHECK(explained_variation(f, d.panel, d.spec) > 0.9999);
    CHECK_THROWS_AS(predict(f, d.spec, std::vector<double>{1.0, 2.0}), Error);

    // Extrapolation is flagged.
    auto far = row(d.panel, 0);
    for (std::size_t k = 0; k < 3; ++k) far[k] = 100.0 * truth[k];
    CHECK(predict(f, d.spec, far).extrapolated);
    CHECK_FALSE(predict(f, d.spec, row(d.panel, 0)).extrapolated);

    // Rescaling β by c and the link argument by 1/c leaves predictions unchanged.
    auto scaled = f;
    for (auto& b : scaled.beta[0]) b *= 2.5;
    for (auto& v : scaled.links[0].v) v *= 2.5;
    for (std::size_t t = 0; t < 200; t += 23) {
        const auto x = row(d.panel, t);
        CHECK(predict(scaled, d.spec, x).value == doctest::Approx(predict(f, d.spec, x).value).epsilon(1e-12));
    }

    // A panel with a constant response has no variation to explain.
    auto cols = std::vector<std::vector<double>>{};
    for (std::size_t j = 0; j < 3; ++j) cols.emplace_back(d.panel.column(j).begin(), d.panel.column(j).end());
    cols.emplace_back(200, 1.0);
    try {
        explained_variation(f, TimeSeriesPanel(d.panel.labels(), cols), d.spec);
        FAIL("expected degenerate response");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateResponse);
    }
}

TEST_CASE("additive shape pins singleton coefficients to one") {
    auto d = make_data(300, 2, 2, 0.1, [](const std::vector<double>& x) { return x[0] + std::sin(x[1]); },
                       {{0}, {1}});
    const auto f = fit(d.panel, d.spec, FitConfig{});
    CHECK(f.beta[0] == std::vector<double>{1.0});
    CHECK(f.beta[1] == std::vector<double>{1.0});
    CHECK(f.r_squared > 0.9);
    // With unit coefficients the prediction is the sum of the links at the raw values.
    const auto x = row(d.panel, 5);
    const auto interp = [](const LinkTable& l, double v) {
        for (std::size_t i = 0; i + 1 < l.v.size(); ++i)
            if (v >= l.v[i] && v <= l.v[i + 1]) {
                const double w = (v - l.v[i]) / (l.v[i + 1] - l.v[i]);
                return (1 - w) * l.g[i] + w * l.g[i + 1];
            }
        return std::nan("");
    };
    CHECK(predict(f, d.spec, x).value == doctest::Approx(interp(f.links[0], x[0]) + interp(f.links[1], x[1])));
    CHECK(f.links[0].v.size() == 100);
}

TEST_CASE("unrelated response gives near-zero explained variation") {
    auto d = make_data(300, 2, 3, 1.0, [](const std::vector<double>&) { return 0.0; }, {{0, 1}});
    const auto f = fit(d.panel, d.spec, FitConfig{});
    CHECK(std::abs(f.r_squared) < 0.1);
    double mean = 0.0;
    for (double v : d.panel.column(2)) mean += v / 300.0;
    const auto p = predict(f, d.spec, row(d.panel, 0));
    CHECK(std::abs(p.value - mean) < 0.5);
}

TEST_CASE("sign constraints hold a wrongly signed coefficient at zero") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n;
    const std::size_t T = 400;
    std::vector<std::vector<double>> cols(4, std::vector<double>(T));
    for (std::size_t t = 0; t < T; ++t) {
        cols[0][t] = n(rng);
        cols[1][t] = cols[0][t] + 0.3 * n(rng);  // collinear with x1
        cols[2][t] = n(rng);
        cols[3][t] = cols[0][t] - 0.15 * cols[1][t] + 0.5 * cols[2][t] + 0.05 * n(rng);
    }
    ModelSpec spec;
    spec.labels = {"x1", "x2", "x3", "y"};
    spec.response = 3;
    spec.groups = {{0, 1, 2}};
    // x2 correlates positively with y, so its sign constraint is +1 while
    // its partial effect is negative.
    spec.sign_constraints = {{0, 1}, {1, 1}, {2, 1}};
    const TimeSeriesPanel panel(spec.labels, cols);
    FitConfig cfg;
    cfg.tolerance = 1e-6;
    const auto f = fit(panel, spec, cfg);
    CHECK(f.beta[0][1] == 0.0);
    CHECK(f.beta[0][0] > 0.0);
    CHECK(f.beta[0][2] > 0.0);
    CHECK(f.iterations >= 1);
    CHECK(f.iterations <= cfg.max_iter);
    CHECK(f.trace.size() == f.iterations);
    const auto& a = f.last_update;
    const auto K = a.beta.size();
    for (std::size_t k = 0; k < K; ++k) {
        CHECK(a.lambda(k) >= 0.0);
        CHECK(std::abs(a.lambda(k) * a.beta(k)) < 1e-10);
        CHECK(a.signs[k] * a.beta(k) >= 0.0);
    }
    // The constrained update equals ζ + H⁻¹Λ′ and matches subset enumeration.
    Eigen::VectorXd lam_signed(K);
    for (std::size_t k = 0; k < K; ++k) lam_signed(k) = a.lambda(k) * a.signs[k];
    CHECK((a.beta - (a.zeta + a.H.ldlt().solve(lam_signed))).norm() < 1e-8);
    oracle::Dense Hd(K, std::vector<double>(K));
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < K; ++j) Hd[i][j] = a.H(i, j);
    const auto ref = oracle::brute_sign_qp(Hd, std::vector<double>(a.b.data(), a.b.data() + K), a.signs);
    REQUIRE(ref.has_value());
    for (std::size_t k = 0; k < K; ++k) CHECK(std::abs(a.beta(k) - (*ref)[k]) < 1e-8);
    const auto j = to_json(f, spec);
    CHECK(j.contains("iterations"));
    CHECK(links_to_csv(f).rfind("group,v,g_hat", 0) == 0);
}

TEST_CASE("fit configuration validation") {
    FitConfig cfg;
    cfg.tolerance = 0.0;
    CHECK_THROWS_AS(cfg.validate(1), Error);
    cfg = FitConfig{};
    cfg.max_iter = 0;
    CHECK_THROWS_AS(cfg.validate(1), Error);
    cfg = FitConfig{};
    cfg.bandwidth_rule = FitConfig::Bandwidth::Fixed;
    cfg.fixed_bandwidth = {0.5};
    CHECK_THROWS_AS(cfg.validate(2), Error);
    CHECK_NOTHROW(cfg.validate(1));
}
