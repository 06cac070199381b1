#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core/csv.hpp"

namespace bcr {

// ---------------------------------------------------------------------------
// Experiment configurations. Each parses from a JSON object with defaults at
// desk scale; unknown keys and out-of-range values raise ConfigError.
// ---------------------------------------------------------------------------

struct BanditConfig {
    int levers = 10;
    int steps = 1000;
    int runs = 200;
    std::uint64_t seed = 1;
    int record_every = 1;
    std::vector<std::string> agents{"bcr", "egreedy", "gittins"};
    double epsilon = 0.1;
    double epsilon_decay = 0.99;
    int gittins_horizon = 1300;
    double gittins_discount = 0.999;
    double gittins_tolerance = 1e-4;
    std::string gittins_cache_dir;
    int workers = 1;
    bool keep_run_logs = false;
    std::string out_dir;
};

struct GridworldConfig {
    std::string map_text;  // takes precedence over map_path when non-empty
    std::string map_path;
    int steps = 300000;
    int runs = 10;
    std::uint64_t seed = 1;
    int record_every = 100;
    std::vector<std::string> agents{"bcr", "r5", "r30", "r200"};
    int summary_window = 5000;
    double p_explore = 1.0;
    double alpha = 0.5;
    double beta = 0.001;
    bool rho_greedy_only = false;
    double mu0 = 1.0;
    double lambda0 = 1.0;
    double precision = 1.0;
    int sweeps_per_step = 1;
    int workers = 1;
    bool keep_run_logs = false;
    std::string out_dir;
};

struct ExpGapConfig {
    std::vector<int> k_list{2, 4, 6, 8};
    int runs = 200;
    std::uint64_t seed = 1;
    int max_steps = 0;  // 0: per-k automatic cap
    int workers = 1;
    bool keep_run_logs = false;
    std::string out_dir;
};

struct ConvergeConfig {
    std::vector<double> biases{0.8, 0.2};
    int true_mode = 0;
    int steps = 1000;
    int runs = 100;
    std::uint64_t seed = 1;
    int record_every = 10;
    int tv_checkpoint = 500;
    double tv_threshold = 0.05;
    int floor_after = 50;
    double floor = 1e-3;
    int monte_carlo = 50;      // boundedness replicates
    int diagnostic_runs = 5;   // recorded runs fed to the boundedness check
    int workers = 1;
    bool keep_run_logs = false;
    std::string out_dir;
};

BanditConfig parse_bandit_config(const nlohmann::json& j);
GridworldConfig parse_gridworld_config(const nlohmann::json& j);
ExpGapConfig parse_exp_gap_config(const nlohmann::json& j);
ConvergeConfig parse_converge_config(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Results. Aggregates are reduced from per-run series in run order, so the
// output is a pure function of (config, seed) regardless of worker count.
// ---------------------------------------------------------------------------

struct RunSeries {
    std::string agent;
    std::string metric;
    std::vector<double> values;  // aligned with ExperimentArtifacts::sample_times
};

struct ExperimentArtifacts {
    std::vector<long long> sample_times;
    std::vector<MetricRow> rows;
    nlohmann::json summary;
    // (file name, content) pairs written by write_artifacts, in order.
    std::vector<std::pair<std::string, std::string>> files;
    // Per-run raw series, kept only when the config sets keep_run_logs.
    std::vector<std::vector<RunSeries>> run_logs;
};

ExperimentArtifacts run_bandit_experiment(const BanditConfig& cfg);
ExperimentArtifacts run_gridworld_experiment(const GridworldConfig& cfg);
ExperimentArtifacts run_exponential_gap_experiment(const ExpGapConfig& cfg);
ExperimentArtifacts run_convergence_experiment(const ConvergeConfig& cfg);

// Parse + dispatch on kind: "bandit" | "gridworld" | "exp_gap" | "converge".
ExperimentArtifacts run_experiment(const std::string& kind,
                                   const nlohmann::json& config);

// Write every artifact file into out_dir (created if missing).
void write_artifacts(const std::string& out_dir, const ExperimentArtifacts& artifacts);

// Mean/standard-error reduction used for every aggregate row (exposed so the
// per-run logs can be cross-checked against the emitted aggregates).
struct MeanStderr {
    double mean = 0.0;
    double stderr_mean = 0.0;
};
MeanStderr reduce_mean_stderr(const std::vector<double>& values);

}  // namespace bcr
