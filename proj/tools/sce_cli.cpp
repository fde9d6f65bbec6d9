// Command-line front end: run | simulate | threshold | cluster.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "sce/io.hpp"

namespace {

struct KeyHelp {
    const char* key;
    const char* help;
};

constexpr KeyHelp kPipelineKeys[] = {
    {"input", "CSV panel with a header row of labels"},
    {"response", "label of the response column"},
    {"transforms", "per-column codes, e.g. gdp:log_diff1,cpi:diff2 (others stay level)"},
    {"time_column", "column holding the time index (excluded from the variables)"},
    {"t1", "CV training segment length"},
    {"t2", "CV validation segment length"},
    {"n_splits", "number of CV splits (default 100)"},
    {"grid_points", "size of the default threshold grid (default 50)"},
    {"grid", "explicit comma-separated threshold grid"},
    {"threshold", "fixed threshold; skips cross-validation"},
    {"seed", "RNG seed for the CV splits (default from SCE_SEED, else 0)"},
    {"mode", "forward | backward clustering"},
    {"kind", "covariance | spearman (threshold subcommand)"},
    {"output", "output directory"},
    {"tolerance", "convergence tolerance on the coefficients (default 1e-6)"},
    {"max_iter", "iteration cap for the estimator (default 200)"},
    {"bandwidth", "rule_of_thumb or comma-separated bandwidths, one per group"},
};

struct PipelineFlags {
    std::string config;
    std::map<std::string, std::string> values;
};

void add_pipeline_flags(CLI::App* cmd, PipelineFlags& flags) {
    cmd->add_option("--config", flags.config, "key = value config file (flags override it)");
    for (const auto& k : kPipelineKeys) cmd->add_option(std::string("--") + k.key, flags.values[k.key], k.help);
}

sce::PipelineConfig resolve(const CLI::App* cmd, const PipelineFlags& flags) {
    sce::PipelineConfig cfg;
    if (const char* env = std::getenv("SCE_SEED"); env != nullptr) sce::apply_key_value(cfg, "seed", env);
    if (!flags.config.empty()) {
        std::ifstream in(flags.config);
        if (!in) throw sce::Error(sce::ErrorKind::Io, "cannot open config " + flags.config);
        for (const auto& [k, v] : sce::read_key_values(in)) sce::apply_key_value(cfg, k, v);
    }
    for (const auto& k : kPipelineKeys) {
        if (cmd->count(std::string("--") + k.key) > 0) sce::apply_key_value(cfg, k.key, flags.values.at(k.key));
    }
    return cfg;
}

int fail(const std::exception& e, const std::string& output_dir) {
    const auto j = sce::error_json(e);
    std::cerr << j.dump(2) << '\n';
    if (!output_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(output_dir, ec);
        if (!ec) {
            try {
                sce::write_json_file((std::filesystem::path(output_dir) / "error.json").string(), j);
            } catch (const std::exception&) {
            }
        }
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Thresholded covariance estimation, screening, clustering and groupwise index models"};
    app.require_subcommand(1);

    PipelineFlags run_flags, threshold_flags, cluster_flags;
    auto* run = app.add_subcommand("run", "screen, cluster and fit the groupwise model");
    add_pipeline_flags(run, run_flags);
    auto* threshold = app.add_subcommand("threshold", "cross-validated threshold selection only");
    add_pipeline_flags(threshold, threshold_flags);
    auto* cluster = app.add_subcommand("cluster", "screen and cluster only");
    add_pipeline_flags(cluster, cluster_flags);

    auto* simulate = app.add_subcommand("simulate", "simulate a panel from a sparse covariance model");
    sce::SimulateConfig sim;
    std::string structure = "diagonal", dependence = "iid", fixture;
    if (const char* env = std::getenv("SCE_SEED"); env != nullptr) sim.seed = std::strtoull(env, nullptr, 10);
    simulate->add_option("--J", sim.J, "number of variables");
    simulate->add_option("--T", sim.T, "number of observations");
    simulate->add_option("--structure", structure, "diagonal | block:3,3[;rho] | banded:b,decay | random_sparse:density");
    simulate->add_option("--dependence", dependence, "iid | m:<m> | var1:<rho>");
    simulate->add_option("--seed", sim.seed);
    simulate->add_option("--output", sim.output);
    simulate->add_option("--fixture", fixture, "two_group: write the regression fixture instead");

    CLI11_PARSE(app, argc, argv);

    std::string output_dir;
    try {
        if (run->parsed()) {
            const auto cfg = resolve(run, run_flags);
            output_dir = cfg.output;
            const auto report = sce::run_pipeline(cfg);
            std::cout << sce::to_json(report).dump(2) << '\n';
        } else if (threshold->parsed()) {
            const auto cfg = resolve(threshold, threshold_flags);
            output_dir = cfg.output;
            const auto res = sce::run_threshold(cfg);
            std::cout << "selected threshold " << res.selected << '\n';
        } else if (cluster->parsed()) {
            const auto cfg = resolve(cluster, cluster_flags);
            output_dir = cfg.output;
            sce::run_cluster(cfg);
            std::ifstream layout((std::filesystem::path(cfg.output) / "clusters.txt").string());
            std::cout << layout.rdbuf();
        } else if (simulate->parsed()) {
            output_dir = sim.output;
            if (fixture == "two_group") {
                std::filesystem::create_directories(sim.output);
                sce::write_csv_file(sce::two_group_fixture(sim.T, sim.seed),
                                    (std::filesystem::path(sim.output) / "panel.csv").string());
            } else if (!fixture.empty()) {
                throw sce::Error(sce::ErrorKind::InvalidArgument, "unknown fixture '" + fixture + "'");
            } else {
                sim.structure = sce::parse_structure(structure);
                sim.dependence = sce::parse_dependence(dependence, sim.J);
                sce::simulate_cmd(sim);
            }
        }
    } catch (const std::exception& e) {
        return fail(e, output_dir);
    }
    return 0;
}
