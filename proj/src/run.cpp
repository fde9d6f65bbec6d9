#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "sce/covariance.hpp"
#include "sce/csv.hpp"
#include "sce/io.hpp"
#include "sce/simd/kernels.hpp"

namespace sce {

namespace {

std::string trim(std::string s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::istringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::InvalidArgument, "config: '" + key + "' expects a number, got '" + v + "'");
}

std::size_t to_size(const std::string& key, const std::string& v) {
    const double d = to_double(key, v);
    if (d < 0.0 || d != std::floor(d)) {
        throw Error(ErrorKind::InvalidArgument, "config: '" + key + "' expects a nonnegative integer");
    }
    return static_cast<std::size_t>(d);
}

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(e, name);
    }
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create output directory " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

void write_meta(const std::string& dir) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    write_json_file(join(dir, "meta.json"), {{"created", buf}, {"simd", std::string(simd::to_string(simd::active_level()))}});
}

ScreenResult run_screen(const PipelineConfig& cfg, const TimeSeriesPanel& panel) {
    if (cfg.threshold) return screen_at(panel, cfg.response, *cfg.threshold);
    const SymMatrix full = spearman_matrix(panel);
    return screen(panel, cfg.response, cfg.cv_for(panel, full));
}

void write_cluster_outputs(const std::string& dir, const ScreenResult& s, const ClusterResult& c, const ModelSpec& m) {
    write_json_file(join(dir, "screen.json"), to_json(s));
    write_json_file(join(dir, "clusters.json"), to_json(c));
    write_text_file(join(dir, "clusters.txt"), render_layout(c));
    write_json_file(join(dir, "model.json"), to_json(m));
}

}  // namespace

StageError::StageError(const Error& inner, std::string stage)
    : Error(inner.kind(), "[" + stage + "] " + inner.what()), stage_(std::move(stage)) {
    if (const auto* located = dynamic_cast<const LocatedError*>(&inner)) {
        row = located->row();
        if (!located->column().empty()) column = located->column();
    }
}

nlohmann::json error_json(const std::exception& e) {
    nlohmann::json err = {{"message", e.what()}};
    if (const auto* se = dynamic_cast<const StageError*>(&e)) {
        err["kind"] = std::string(to_string(se->kind()));
        err["stage"] = se->stage();
        if (se->row) err["row"] = *se->row;
        if (se->column) err["column"] = *se->column;
    } else if (const auto* le = dynamic_cast<const LocatedError*>(&e)) {
        err["kind"] = std::string(to_string(le->kind()));
        err["row"] = le->row();
        err["column"] = le->column();
    } else if (const auto* ee = dynamic_cast<const Error*>(&e)) {
        err["kind"] = std::string(to_string(ee->kind()));
    } else {
        err["kind"] = "internal";
    }
    return {{"error", err}};
}

void PipelineConfig::validate() const {
    if (input.empty()) throw Error(ErrorKind::InvalidArgument, "config: input path is required");
    if (response.empty()) throw Error(ErrorKind::InvalidArgument, "config: response label is required");
    if (n_splits == 0) throw Error(ErrorKind::InvalidArgument, "config: n_splits must be positive");
    if (threshold && !(*threshold >= 0.0)) throw Error(ErrorKind::InvalidArgument, "config: threshold must be nonnegative");
}

CvConfig PipelineConfig::cv_for(const TimeSeriesPanel& panel, const SymMatrix& full) const {
    const std::size_t T = panel.rows();
    CvConfig c;
    c.n_splits = n_splits;
    c.seed = seed;
    c.grid = grid.empty() ? default_grid(full, grid_points) : grid;
    if (t1 == 0 && t2 == 0) {
        const auto segment = static_cast<std::size_t>(std::llround(2.0 * static_cast<double>(T) / 3.0));
        c.t1 = std::max<std::size_t>(2, segment / 3);
        c.t2 = std::max<std::size_t>(2, segment - c.t1);
    } else {
        c.t1 = t1;
        c.t2 = t2 == 0 ? 2 * t1 : t2;
    }
    return c;
}

std::map<std::string, std::string> read_key_values(std::istream& in) {
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw LocatedError(ErrorKind::Parse, "config line " + std::to_string(n) + " is not key = value", n, "");
        }
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

void apply_key_value(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "input") cfg.input = value;
    else if (key == "response") cfg.response = value;
    else if (key == "transforms") cfg.ingest.transforms = parse_transform_map(value);
    else if (key == "time_column") cfg.ingest.time_column = value;
    else if (key == "t1") cfg.t1 = to_size(key, value);
    else if (key == "t2") cfg.t2 = to_size(key, value);
    else if (key == "n_splits") cfg.n_splits = to_size(key, value);
    else if (key == "grid_points") cfg.grid_points = to_size(key, value);
    else if (key == "grid") {
        cfg.grid.clear();
        for (const auto& v : split(value, ',')) cfg.grid.push_back(to_double(key, v));
    } else if (key == "threshold") cfg.threshold = to_double(key, value);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_size(key, value));
    else if (key == "mode") {
        if (value == "forward") cfg.mode = ClusterMode::Forward;
        else if (value == "backward") cfg.mode = ClusterMode::Backward;
        else throw Error(ErrorKind::InvalidArgument, "config: mode must be forward or backward");
    } else if (key == "kind") cfg.kind = matrix_kind_from_string(value);
    else if (key == "output") cfg.output = value;
    else if (key == "tolerance") cfg.fit.tolerance = to_double(key, value);
    else if (key == "max_iter") cfg.fit.max_iter = to_size(key, value);
    else if (key == "bandwidth") {
        if (value == "rule_of_thumb") {
            cfg.fit.bandwidth_rule = FitConfig::Bandwidth::RuleOfThumb;
            cfg.fit.fixed_bandwidth.clear();
        } else {
            cfg.fit.bandwidth_rule = FitConfig::Bandwidth::Fixed;
            cfg.fit.fixed_bandwidth.clear();
            for (const auto& v : split(value, ',')) cfg.fit.fixed_bandwidth.push_back(to_double(key, v));
        }
    } else {
        throw Error(ErrorKind::InvalidArgument, "config: unknown key '" + key + "'");
    }
}

nlohmann::json to_json(const PipelineReport& r) {
    return {{"selected_threshold", r.selected_threshold}, {"K", r.K},
            {"S", r.S},                                   {"r_squared", r.r_squared},
            {"converged", r.converged},                   {"iterations", r.iterations}};
}

PipelineReport run_pipeline(const PipelineConfig& cfg) {
    stage("config", [&] { cfg.validate(); return 0; });
    const auto panel = stage("ingest", [&] { return ingest_file(cfg.input, cfg.ingest); });
    const auto scr = stage("screen", [&] { return run_screen(cfg, panel); });
    const auto clusters = stage("cluster", [&] {
        return cfg.mode == ClusterMode::Forward ? cluster_forward(scr) : cluster_backward(scr);
    });
    const auto spec = stage("model", [&] { return build_model_spec(scr, clusters); });
    const auto fitted = stage("fit", [&] { return fit(panel, spec, cfg.fit); });

    PipelineReport report{scr.threshold, scr.kept.size(), clusters.sets.size(), fitted.r_squared, fitted.converged,
                          fitted.iterations};
    stage("report", [&] {
        ensure_dir(cfg.output);
        write_cluster_outputs(cfg.output, scr, clusters, spec);
        write_json_file(join(cfg.output, "fit.json"), to_json(fitted, spec));
        write_text_file(join(cfg.output, "links.csv"), links_to_csv(fitted));
        write_json_file(join(cfg.output, "report.json"), to_json(report));
        write_meta(cfg.output);
        return 0;
    });
    return report;
}

CvResult run_threshold(const PipelineConfig& cfg) {
    if (cfg.input.empty()) throw StageError(Error(ErrorKind::InvalidArgument, "input path is required"), "config");
    const auto panel = stage("ingest", [&] { return ingest_file(cfg.input, cfg.ingest); });
    return stage("threshold", [&] {
        const SymMatrix full = estimate(panel, cfg.kind);
        const auto res = select_threshold(panel, cfg.cv_for(panel, full), cfg.kind);
        ensure_dir(cfg.output);
        write_json_file(join(cfg.output, "cv.json"), to_json(res));
        write_csv_file(hard_threshold(full, res.selected), join(cfg.output, "regularized.csv"));
        return res;
    });
}

ModelSpec run_cluster(const PipelineConfig& cfg) {
    stage("config", [&] { cfg.validate(); return 0; });
    const auto panel = stage("ingest", [&] { return ingest_file(cfg.input, cfg.ingest); });
    const auto scr = stage("screen", [&] { return run_screen(cfg, panel); });
    const auto clusters = stage("cluster", [&] {
        return cfg.mode == ClusterMode::Forward ? cluster_forward(scr) : cluster_backward(scr);
    });
    const auto spec = stage("model", [&] { return build_model_spec(scr, clusters); });
    stage("report", [&] {
        ensure_dir(cfg.output);
        write_cluster_outputs(cfg.output, scr, clusters, spec);
        return 0;
    });
    return spec;
}

CovStructure parse_structure(const std::string& s) {
    const auto colon = s.find(':');
    const std::string kind = s.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : s.substr(colon + 1);
    if (kind == "diagonal") return CovStructure::diagonal();
    if (kind == "block") {
        const auto parts = split(args, ';');
        std::vector<std::size_t> sizes;
        for (const auto& v : split(parts.at(0), ',')) sizes.push_back(to_size("block", v));
        return CovStructure::block(sizes, parts.size() > 1 ? to_double("block", parts[1]) : 0.5);
    }
    if (kind == "banded") {
        const auto parts = split(args, ',');
        if (parts.size() != 2) throw Error(ErrorKind::InvalidArgument, "banded structure needs bandwidth,decay");
        return CovStructure::banded(to_size("banded", parts[0]), to_double("banded", parts[1]));
    }
    if (kind == "random_sparse") return CovStructure::random_sparse(args.empty() ? 0.1 : to_double("random_sparse", args));
    throw Error(ErrorKind::InvalidArgument, "unknown structure '" + s + "'");
}

DependenceSpec parse_dependence(const std::string& s, std::size_t J) {
    if (s == "iid") return DependenceSpec::iid();
    if (s.rfind("m:", 0) == 0) return DependenceSpec::m_dependent(to_size("m", s.substr(2)));
    if (s.rfind("var1:", 0) == 0) return DependenceSpec::var1_scaled_identity(J, to_double("var1", s.substr(5)));
    throw Error(ErrorKind::InvalidArgument, "unknown dependence '" + s + "'");
}

void simulate_cmd(const SimulateConfig& cfg) {
    const auto model = make_sparse_cov(cfg.J, cfg.structure, cfg.seed);
    const auto panel = gen_panel(model, cfg.dependence, cfg.T, cfg.seed);
    ensure_dir(cfg.output);
    write_csv_file(panel, join(cfg.output, "panel.csv"));
    write_csv_file(model.sigma, join(cfg.output, "truth_sigma.csv"));
    write_json_file(join(cfg.output, "model.json"),
                    {{"model", to_json(model)}, {"dependence", to_json(cfg.dependence)}, {"T", cfg.T}, {"seed", cfg.seed}});
}

TimeSeriesPanel two_group_fixture(std::size_t T, std::uint64_t seed) {
    // x1..x3 and x4..x5 are correlated blocks, x6..x10 independent noise.
    const auto model = make_sparse_cov(10, CovStructure::block({3, 2, 1, 1, 1, 1, 1}, 0.6), seed);
    const auto x = gen_panel(model, DependenceSpec::iid(), T, seed);
    const double b1[] = {0.6, 0.48, 0.64};
    const double b2[] = {0.8, 0.6};
    std::mt19937_64 rng(seed ^ 0xfeedbeefULL);
    std::normal_distribution<double> noise(0.0, 0.3);
    std::vector<double> y(T);
    for (std::size_t t = 0; t < T; ++t) {
        const double u = b1[0] * x(t, 0) + b1[1] * x(t, 1) + b1[2] * x(t, 2);
        const double v = b2[0] * x(t, 3) + b2[1] * x(t, 4);
        y[t] = u + 0.25 * u * u * u + 2.0 * std::tanh(v) + noise(rng);
    }
    std::vector<std::string> labels = x.labels();
    std::vector<std::vector<double>> cols;
    for (std::size_t j = 0; j < x.cols(); ++j) cols.emplace_back(x.column(j).begin(), x.column(j).end());
    labels.push_back("y");
    cols.push_back(std::move(y));
    return TimeSeriesPanel(std::move(labels), std::move(cols));
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    out << text;
}

void write_json_file(const std::string& path, const nlohmann::json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace sce
