#include "sce/process_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "sce/covariance.hpp"
#include "sce/csv.hpp"
#include "sce/error.hpp"
#include "sce/parallel.hpp"

namespace sce {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kMinEigen = 0.1;
constexpr std::size_t kBurnIn = 500;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

RowMat to_eigen(const SymMatrix& m) {
    const auto n = static_cast<Eigen::Index>(m.dim());
    return Eigen::Map<const RowMat>(m.entries().data(), n, n);
}

SymMatrix from_eigen(const RowMat& a, std::vector<std::string> labels) {
    const auto n = a.rows();
    std::vector<double> e(static_cast<std::size_t>(n * n));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            const double v = 0.5 * (a(i, j) + a(j, i));
            e[static_cast<std::size_t>(i * n + j)] = v;
            e[static_cast<std::size_t>(j * n + i)] = v;
        }
    }
    return SymMatrix(std::move(labels), std::move(e));
}

// Shifts a unit-diagonal matrix toward I just enough that its smallest
// eigenvalue reaches kMinEigen, keeping the unit diagonal.
RowMat lift_to_min_eigen(RowMat a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()(0);
    const double target = kMinEigen + 1e-9;
    if (lmin < target) {
        const double delta = (target - lmin) / (1.0 - target);
        a = (a + delta * RowMat::Identity(a.rows(), a.cols())) / (1.0 + delta);
        a.diagonal().setOnes();
    }
    return a;
}

SymMatrix difference(const SymMatrix& a, const SymMatrix& b) {
    std::vector<double> e(a.entries().size());
    for (std::size_t k = 0; k < e.size(); ++k) e[k] = a.entries()[k] - b.entries()[k];
    return SymMatrix(a.labels(), std::move(e));
}

}  // namespace

CovStructure CovStructure::block(std::vector<std::size_t> sizes, double rho) {
    CovStructure s;
    s.kind = Kind::Block;
    s.block_sizes = std::move(sizes);
    s.block_rho = rho;
    return s;
}

CovStructure CovStructure::banded(std::size_t bandwidth, double decay) {
    CovStructure s;
    s.kind = Kind::Banded;
    s.bandwidth = bandwidth;
    s.decay = decay;
    return s;
}

CovStructure CovStructure::random_sparse(double density) {
    CovStructure s;
    s.kind = Kind::RandomSparse;
    s.density = density;
    return s;
}

std::string to_string(CovStructure::Kind kind) {
    switch (kind) {
        case CovStructure::Kind::Diagonal: return "diagonal";
        case CovStructure::Kind::Block: return "block";
        case CovStructure::Kind::Banded: return "banded";
        case CovStructure::Kind::RandomSparse: return "random_sparse";
    }
    return "unknown";
}

nlohmann::json to_json(const SparseCovModel& m) {
    nlohmann::json s = {{"kind", to_string(m.structure.kind)}, {"q", m.structure.q}};
    switch (m.structure.kind) {
        case CovStructure::Kind::Block:
            s["block_sizes"] = m.structure.block_sizes;
            s["block_rho"] = m.structure.block_rho;
            break;
        case CovStructure::Kind::Banded:
            s["bandwidth"] = m.structure.bandwidth;
            s["decay"] = m.structure.decay;
            break;
        case CovStructure::Kind::RandomSparse:
            s["density"] = m.structure.density;
            break;
        case CovStructure::Kind::Diagonal:
            break;
    }
    return {{"structure", s},
            {"params", {{"q", m.params.q}, {"c0", m.params.c0}, {"M", m.params.M}}},
            {"sigma", to_json(m.sigma)}};
}

DependenceSpec DependenceSpec::var1_scaled_identity(std::size_t J, double rho) {
    std::vector<double> a(J * J, 0.0);
    for (std::size_t i = 0; i < J; ++i) a[i * J + i] = rho;
    return var1(std::move(a));
}

nlohmann::json to_json(const DependenceSpec& d) {
    switch (d.kind) {
        case DependenceSpec::Kind::Iid: return {{"kind", "iid"}};
        case DependenceSpec::Kind::MDependent: return {{"kind", "m_dependent"}, {"m", d.m}};
        case DependenceSpec::Kind::Var1: {
            const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d.coeff.size()))));
            return {{"kind", "var1"}, {"coeff", d.coeff}, {"spectral_radius", spectral_radius(d.coeff, n)}};
        }
    }
    return {};
}

SparseCovModel make_sparse_cov(std::size_t J, const CovStructure& structure, std::uint64_t seed) {
    if (J == 0) throw Error(ErrorKind::InvalidArgument, "make_sparse_cov: J must be positive");
    if (!(structure.q >= 0.0 && structure.q < 1.0)) throw Error(ErrorKind::InvalidArgument, "make_sparse_cov: q must lie in [0, 1)");
    const auto n = static_cast<Eigen::Index>(J);
    RowMat a = RowMat::Identity(n, n);

    switch (structure.kind) {
        case CovStructure::Kind::Diagonal:
            break;
        case CovStructure::Kind::Block: {
            std::size_t total = 0;
            for (auto b : structure.block_sizes) {
                if (b == 0) throw Error(ErrorKind::InvalidArgument, "make_sparse_cov: empty block");
                total += b;
            }
            if (total != J) {
                throw Error(ErrorKind::InvalidArgument, "make_sparse_cov: block sizes sum to " +
                                                            std::to_string(total) + ", expected " +
                                                            std::to_string(J));
            }
            if (!(structure.block_rho >= 0.0 && structure.block_rho <= 1.0 - kMinEigen)) {
                throw Error(ErrorKind::InvalidArgument, "make_sparse_cov: block_rho must lie in [0, 0.9]");
            }
            Eigen::Index start = 0;
            for (auto b : structure.block_sizes) {
                const auto len = static_cast<Eigen::Index>(b);
                for (Eigen::Index i = start; i < start + len; ++i) {
                    for (Eigen::Index j = start; j < start + len; ++j) {
                        if (i != j) a(i, j) = structure.block_rho;
                    }
                }
                start += len;
            }
            break;
        }
        case CovStructure::Kind::Banded: {
            if (!(std::abs(structure.decay) < 1.0)) throw Error(ErrorKind::InvalidArgument, "make_sparse_cov: |decay| must be < 1");
            for (Eigen::Index i = 0; i < n; ++i) {
                for (Eigen::Index j = 0; j < n; ++j) {
                    const auto lag = static_cast<std::size_t>(std::abs(i - j));
                    if (lag > 0 && lag <= structure.bandwidth) a(i, j) = std::pow(structure.decay, static_cast<double>(lag));
                }
            }
            break;
        }
        case CovStructure::Kind::RandomSparse: {
            if (!(structure.density >= 0.0 && structure.density <= 1.0)) {
                throw Error(ErrorKind::InvalidArgument, "make_sparse_cov: density must lie in [0, 1]");
            }
            auto rng = make_rng(seed, 0xc0ffee);
            std::bernoulli_distribution edge(structure.density);
            std::uniform_real_distribution<double> mag(0.2, 0.5);
            std::bernoulli_distribution negative(0.5);
            for (Eigen::Index i = 0; i < n; ++i) {
                for (Eigen::Index j = i + 1; j < n; ++j) {
                    if (!edge(rng)) continue;
                    const double v = mag(rng);
                    a(i, j) = a(j, i) = negative(rng) ? -v : v;
                }
            }
            break;
        }
    }

    a = lift_to_min_eigen(std::move(a));
    SparseCovModel model;
    model.sigma = from_eigen(a, default_labels(J));
    model.structure = structure;
    const auto diag = uniformity_diagnostics(model.sigma, structure.q);
    model.params = UniformityParams{structure.q, diag.max_row_q_norm, 1.0};
    return model;
}

double spectral_radius(std::span<const double> a, std::size_t n) {
    if (a.size() != n * n) throw Error(ErrorKind::InvalidArgument, "spectral_radius: size mismatch");
    const Eigen::Map<const RowMat> m(a.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

TimeSeriesPanel gen_panel(const SparseCovModel& model, const DependenceSpec& dep, std::size_t T,
                          std::uint64_t seed) {
    if (T < 2) throw Error(ErrorKind::InsufficientData, "gen_panel: T must be at least 2");
    const std::size_t J = model.sigma.dim();
    const auto n = static_cast<Eigen::Index>(J);
    const RowMat sigma = to_eigen(model.sigma);
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::InvalidArgument, "gen_panel: sigma is not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();

    auto rng = make_rng(seed, 0x9a9e1);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&] {
        Eigen::VectorXd z(n);
        for (Eigen::Index d = 0; d < n; ++d) z(d) = normal(rng);
        return z;
    };

    std::vector<std::vector<double>> cols(J, std::vector<double>(T));
    auto store = [&](std::size_t t, const Eigen::VectorXd& x) {
        for (std::size_t d = 0; d < J; ++d) cols[d][t] = x(static_cast<Eigen::Index>(d));
    };

    if (dep.kind == DependenceSpec::Kind::Var1) {
        if (dep.coeff.size() != J * J) throw Error(ErrorKind::InvalidArgument, "gen_panel: VAR(1) coefficient must be J×J");
        const double radius = spectral_radius(dep.coeff, J);
        if (!(radius < 1.0)) {
            throw Error(ErrorKind::InfeasibleDependence,
                        "gen_panel: VAR(1) spectral radius " + std::to_string(radius) + " is not below 1");
        }
        const Eigen::Map<const RowMat> A(dep.coeff.data(), n, n);
        // Stationarity Σ = AΣAᵀ + Q fixes the innovation covariance.
        const Eigen::MatrixXd Q = sigma - A * sigma * A.transpose();
        const Eigen::MatrixXd Qs = 0.5 * (Q + Q.transpose());
        Eigen::LLT<Eigen::MatrixXd> qllt(Qs);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qes(Qs, Eigen::EigenvaluesOnly);
        if (qllt.info() != Eigen::Success || qes.eigenvalues()(0) <= 0.0) {
            throw Error(ErrorKind::InfeasibleDependence,
                        "gen_panel: implied VAR(1) innovation covariance is not positive definite");
        }
        const Eigen::MatrixXd Lq = qllt.matrixL();
        Eigen::VectorXd x = L * draw();
        for (std::size_t b = 0; b < kBurnIn; ++b) x = A * x + Lq * draw();
        for (std::size_t t = 0; t < T; ++t) {
            x = A * x + Lq * draw();
            store(t, x);
        }
    } else {
        const std::size_t m = dep.kind == DependenceSpec::Kind::MDependent ? dep.m : 0;
        const double w = 1.0 / std::sqrt(static_cast<double>(m + 1));
        // z[k] is the innovation at time k − m.
        std::vector<Eigen::VectorXd> z;
        z.reserve(T + m);
        for (std::size_t k = 0; k < T + m; ++k) z.push_back(draw());
        for (std::size_t t = 0; t < T; ++t) {
            Eigen::VectorXd window = Eigen::VectorXd::Zero(n);
            for (std::size_t l = 0; l <= m; ++l) window += z[t + m - l];
            store(t, L * (m == 0 ? window : Eigen::VectorXd(w * window)));
        }
    }
    return TimeSeriesPanel(model.sigma.labels(), std::move(cols));
}

double fractional_cover_size(const DependenceSpec& dep, std::size_t T) {
    switch (dep.kind) {
        case DependenceSpec::Kind::Iid: return 1.0;
        case DependenceSpec::Kind::MDependent:
            return static_cast<double>(dep.m + 1 < T ? dep.m + 1 : T);
        case DependenceSpec::Kind::Var1:
            throw Error(ErrorKind::NotApplicable,
                        "fractional cover is not defined for VAR(1); dependence is geometric beta-mixing");
    }
    return 1.0;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

RateReport rate_experiment(const SparseCovModel& model, const DependenceSpec& dep,
                           const std::vector<std::size_t>& T_list, std::size_t n_reps, const CvTemplate& cv,
                           std::uint64_t seed) {
    if (n_reps == 0) throw Error(ErrorKind::InvalidArgument, "rate_experiment: n_reps must be positive");
    if (T_list.empty()) throw Error(ErrorKind::InvalidArgument, "rate_experiment: empty T list");
    for (std::size_t k = 1; k < T_list.size(); ++k) {
        if (T_list[k] <= T_list[k - 1]) throw Error(ErrorKind::InvalidArgument, "rate_experiment: T list must be strictly increasing");
    }
    const std::size_t J = model.sigma.dim();
    const double dependence = dep.kind == DependenceSpec::Kind::Var1 ? spectral_radius(dep.coeff, J)
                                                                     : static_cast<double>(dep.m);
    RateReport report;
    for (std::size_t ti = 0; ti < T_list.size(); ++ti) {
        const std::size_t T = T_list[ti];
        std::vector<RateRow> rows(n_reps);
        std::vector<std::exception_ptr> errors(n_reps);
        parallel_for(n_reps, [&](std::size_t rep) {
            try {
                const std::uint64_t rep_seed = seed ^ (0x9e3779b97f4a7c15ULL * (ti * 100003 + rep + 1));
                const auto panel = gen_panel(model, dep, T, rep_seed);
                const auto full = sample_covariance(panel);
                const auto segment = static_cast<std::size_t>(std::llround(cv.segment_fraction * static_cast<double>(T)));
                CvConfig cfg;
                cfg.t1 = std::max<std::size_t>(
                    2, static_cast<std::size_t>(std::llround(cv.train_fraction * static_cast<double>(segment))));
                cfg.t2 = segment - cfg.t1;
                cfg.n_splits = cv.n_splits;
                cfg.grid = default_grid(full, cv.grid_points);
                cfg.seed = rep_seed;
                const auto sel = select_threshold(panel, cfg, MatrixKind::Covariance);
                const auto err = difference(hard_threshold(full, sel.selected), model.sigma);
                rows[rep] = {T, dependence, rep, operator_norm(err), frobenius_norm(err) / std::sqrt(static_cast<double>(J)),
                             sel.selected};
            } catch (...) {
                errors[rep] = std::current_exception();
            }
        });
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
        RateSummary s;
        s.T = T;
        std::vector<double> op, fro;
        for (const auto& r : rows) {
            op.push_back(r.op_error);
            fro.push_back(r.frob_error);
        }
        s.median_op_error = median(op);
        s.median_frob_error = median(fro);
        if (dep.kind != DependenceSpec::Kind::Var1) {
            const double cover = fractional_cover_size(dep, T);
            s.theoretical_rate = model.params.c0 *
                                 std::pow(std::log(static_cast<double>(J)) * cover / static_cast<double>(T),
                                          (1.0 - model.params.q) / 2.0);
        }
        report.summary.push_back(s);
        report.rows.insert(report.rows.end(), rows.begin(), rows.end());
    }
    return report;
}

std::string to_csv(const RateReport& r) {
    std::ostringstream out;
    out << "T,m_or_radius,rep,op_error,frob_error\n";
    for (const auto& row : r.rows) {
        out << row.T << ',' << csv::format_double(row.dependence) << ',' << row.rep << ','
            << csv::format_double(row.op_error) << ',' << csv::format_double(row.frob_error) << '\n';
    }
    return out.str();
}

nlohmann::json to_json(const RateReport& r) {
    nlohmann::json s = nlohmann::json::array();
    for (const auto& x : r.summary) {
        nlohmann::json row = {{"T", x.T}, {"median_op_error", x.median_op_error}, {"median_frob_error", x.median_frob_error}};
        row["theoretical_rate"] = x.theoretical_rate ? nlohmann::json(*x.theoretical_rate) : nlohmann::json(nullptr);
        s.push_back(row);
    }
    return {{"summary", s}};
}

}  // namespace sce
