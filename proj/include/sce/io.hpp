#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sce/error.hpp"
#include "sce/groupwise.hpp"
#include "sce/panel.hpp"
#include "sce/process_sim.hpp"

namespace sce {

enum class Transform { Level, Log, Diff1, Diff2, LogDiff1, LogDiff2 };

std::string_view to_string(Transform t);
Transform transform_from_string(std::string_view s);
std::size_t transform_lag(Transform t);

/// Columns absent from the map are taken as level.
using TransformMap = std::map<std::string, Transform>;

/// "GDP:log_diff1,CPI:diff2"
TransformMap parse_transform_map(const std::string& spec);

/// Applies one transform to a raw series; the result is shorter by the lag.
/// `column` is only used in error messages.
std::vector<double> apply_transform(const std::vector<double>& raw, Transform t, const std::string& column);

struct IngestOptions {
    TransformMap transforms;
    std::optional<std::string> time_column;
    bool standardize = true;
};

/// Reads a CSV panel, applies per-column transforms, drops the leading
/// max-lag rows from every column so they stay aligned, and standardizes.
TimeSeriesPanel ingest(std::istream& in, const IngestOptions& opts);
TimeSeriesPanel ingest_file(const std::string& path, const IngestOptions& opts);

enum class ClusterMode { Forward, Backward };

struct PipelineConfig {
    std::string input;
    std::string response;
    IngestOptions ingest;

    // CV. Zero t1/t2 picks a segment of two thirds of T split one third /
    // two thirds; an empty grid is the default grid.
    std::size_t t1 = 0;
    std::size_t t2 = 0;
    std::size_t n_splits = 100;
    std::size_t grid_points = 50;
    std::vector<double> grid;
    std::optional<double> threshold;  // skip CV and use this threshold

    FitConfig fit;
    ClusterMode mode = ClusterMode::Forward;
    MatrixKind kind = MatrixKind::Spearman;  // `threshold` subcommand only
    std::uint64_t seed = 0;
    std::string output = ".";

    void validate() const;
    CvConfig cv_for(const TimeSeriesPanel& panel, const SymMatrix& full) const;
};

/// Key-value config: one `key = value` per line, `#` comments. Keys match
/// the long CLI flags (input, response, transforms, t1, t2, n_splits,
/// grid_points, grid, threshold, seed, mode, kind, output, tolerance,
/// max_iter, bandwidth, time_column).
std::map<std::string, std::string> read_key_values(std::istream& in);
void apply_key_value(PipelineConfig& cfg, const std::string& key, const std::string& value);

/// Error tagged with the pipeline stage that raised it.
class StageError : public Error {
public:
    StageError(const Error& inner, std::string stage);

    const std::string& stage() const noexcept { return stage_; }
    std::optional<std::size_t> row;
    std::optional<std::string> column;

private:
    std::string stage_;
};

nlohmann::json error_json(const std::exception& e);

struct PipelineReport {
    double selected_threshold = 0.0;
    std::size_t K = 0;
    std::size_t S = 0;
    double r_squared = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
};

nlohmann::json to_json(const PipelineReport& r);

/// Screen, cluster and fit; writes screen.json, clusters.json, clusters.txt,
/// model.json, fit.json, links.csv, report.json and meta.json into cfg.output.
PipelineReport run_pipeline(const PipelineConfig& cfg);

/// CV only; writes cv.json and regularized.csv.
CvResult run_threshold(const PipelineConfig& cfg);

/// Screen and cluster; writes screen.json, clusters.json, clusters.txt, model.json.
ModelSpec run_cluster(const PipelineConfig& cfg);

struct SimulateConfig {
    std::size_t J = 10;
    std::size_t T = 500;
    CovStructure structure;
    DependenceSpec dependence;
    std::uint64_t seed = 0;
    std::string output = ".";
};

/// "diagonal", "block:3,3[;rho]", "banded:2,0.5", "random_sparse:0.1"
CovStructure parse_structure(const std::string& s);
/// "iid", "m:3", "var1:0.5" (scaled identity coefficient)
DependenceSpec parse_dependence(const std::string& s, std::size_t J);

/// Writes panel.csv, truth_sigma.csv and model.json.
void simulate_cmd(const SimulateConfig& cfg);

/// Regression fixture with two predictor blocks driving the response
/// through monotone links plus independent noise predictors.
TimeSeriesPanel two_group_fixture(std::size_t T, std::uint64_t seed);

void write_text_file(const std::string& path, const std::string& text);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace sce
