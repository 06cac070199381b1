// Command-line front end. All simulation work happens behind the C API of the
// shared library; this binary only assembles JSON configs from flags and
// reports results.

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bcr/bcr.h"

namespace {

using nlohmann::json;

[[noreturn]] void die(const std::string& message) {
    std::fprintf(stderr, "error: %s\n", message.c_str());
    std::exit(1);
}

json load_config_file(const std::string& path) {
    if (path.empty()) {
        return json::object();
    }
    std::ifstream in(path);
    if (!in) {
        die("cannot open config file '" + path + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        die("config file '" + path + "': " + e.what());
    }
    if (!j.is_object()) {
        die("config file '" + path + "' must contain a JSON object");
    }
    return j;
}

// Flags shared by every experiment subcommand. A flag overrides the config
// file only when the user actually passed it.
struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    int runs = 0;
    int steps = 0;
    int workers = 0;
    int record_every = 0;

    CLI::Option* seed_opt = nullptr;
    CLI::Option* runs_opt = nullptr;
    CLI::Option* steps_opt = nullptr;
    CLI::Option* out_opt = nullptr;
    CLI::Option* workers_opt = nullptr;
    CLI::Option* record_opt = nullptr;

    void attach(CLI::App* cmd, bool with_record_every) {
        cmd->add_option("--config", config_path, "JSON config file");
        seed_opt = cmd->add_option("--seed", seed, "base RNG seed");
        runs_opt = cmd->add_option("--runs", runs, "number of independent runs");
        steps_opt = cmd->add_option("--steps", steps, "time steps per run");
        out_opt = cmd->add_option("--out", out_dir,
                                  "output directory for CSV/SVG/JSON artifacts");
        workers_opt = cmd->add_option("--workers", workers, "worker threads");
        if (with_record_every) {
            record_opt = cmd->add_option("--record-every", record_every,
                                         "curve sampling stride");
        }
    }

    void apply(json& config, const char* steps_key = "steps") const {
        if (seed_opt != nullptr && *seed_opt) config["seed"] = seed;
        if (runs_opt != nullptr && *runs_opt) config["runs"] = runs;
        if (steps_opt != nullptr && *steps_opt) config[steps_key] = steps;
        if (out_opt != nullptr && *out_opt) config["out_dir"] = out_dir;
        if (workers_opt != nullptr && *workers_opt) config["workers"] = workers;
        if (record_opt != nullptr && *record_opt) config["record_every"] = record_every;
    }
};

int run_and_report(const char* kind, const json& config) {
    const std::string text = config.dump();
    bcr_experiment* experiment = nullptr;
    if (bcr_experiment_create(kind, text.c_str(), &experiment) != BCR_OK) {
        die(bcr_last_error());
    }
    if (bcr_experiment_run(experiment) != BCR_OK) {
        const std::string message = bcr_last_error();
        bcr_experiment_destroy(experiment);
        die(message);
    }
    char* summary = bcr_experiment_summary_json(experiment);
    if (summary == nullptr) {
        bcr_experiment_destroy(experiment);
        die(bcr_last_error());
    }
    std::printf("%s\n", summary);
    bcr_string_free(summary);
    bcr_experiment_destroy(experiment);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian control rule simulation toolkit"};
    app.set_version_flag("--version", bcr_version());
    app.require_subcommand(1);

    // bandit -----------------------------------------------------------------
    CLI::App* bandit = app.add_subcommand(
        "bandit", "Bernoulli bandit comparison: posterior sampling vs "
                  "epsilon-greedy vs Gittins indices");
    CommonFlags bandit_flags;
    bandit_flags.attach(bandit, true);
    int levers = 0;
    std::vector<std::string> bandit_agents;
    double epsilon = 0.0;
    double epsilon_decay = 0.0;
    auto* levers_opt = bandit->add_option("--levers", levers, "number of levers");
    auto* bandit_agents_opt =
        bandit->add_option("--agents", bandit_agents, "agent roster")
            ->delimiter(',');
    auto* epsilon_opt = bandit->add_option("--epsilon", epsilon,
                                           "initial exploration probability");
    auto* decay_opt = bandit->add_option("--epsilon-decay", epsilon_decay,
                                         "per-step exploration decay factor");

    // gridworld ---------------------------------------------------------------
    CLI::App* gridworld = app.add_subcommand(
        "gridworld", "7x7 membrane grid-world: sampled-model control vs "
                     "R-learning variants");
    CommonFlags grid_flags;
    grid_flags.attach(gridworld, true);
    std::string map_path;
    std::vector<std::string> grid_agents;
    double p_explore = 0.0;
    int summary_window = 0;
    int sweeps = 0;
    auto* map_opt = gridworld->add_option("--map", map_path, "map file");
    auto* grid_agents_opt =
        gridworld->add_option("--agents", grid_agents, "agent roster")->delimiter(',');
    auto* p_explore_opt = gridworld->add_option(
        "--p-explore", p_explore, "R-learning exploration probability");
    auto* window_opt = gridworld->add_option("--summary-window", summary_window,
                                             "steps in the final reward summary");
    auto* sweeps_opt =
        gridworld->add_option("--sweeps", sweeps, "posterior sweeps per step");

    // gittins-build -----------------------------------------------------------
    CLI::App* gittins = app.add_subcommand(
        "gittins-build", "precompute and cache the Gittins index table");
    int g_horizon = 1300;
    double g_discount = 0.999;
    double g_tolerance = 1e-4;
    std::string g_cache = "cache";
    gittins->add_option("--horizon", g_horizon, "calibration horizon");
    gittins->add_option("--discount", g_discount, "geometric discount factor");
    gittins->add_option("--tolerance", g_tolerance, "bisection tolerance");
    gittins->add_option("--out,--cache-dir", g_cache, "cache directory");
    // Accepted for interface uniformity; the table build has no runs/steps/seed.
    std::uint64_t g_seed = 0;
    int g_runs = 0;
    int g_steps = 0;
    gittins->add_option("--seed", g_seed, "unused for this subcommand");
    gittins->add_option("--runs", g_runs, "unused for this subcommand");
    gittins->add_option("--steps", g_steps, "unused for this subcommand");

    // exp-gap -----------------------------------------------------------------
    CLI::App* exp_gap = app.add_subcommand(
        "exp-gap", "steps to first reward in k-consecutive-action environments "
                   "(--steps caps each run)");
    CommonFlags gap_flags;
    gap_flags.attach(exp_gap, false);
    std::vector<int> k_list;
    auto* k_opt = exp_gap->add_option("--k", k_list, "run lengths k")->delimiter(',');

    // converge ----------------------------------------------------------------
    CLI::App* converge = app.add_subcommand(
        "converge", "posterior convergence and divergence diagnostics on a "
                    "two-coin mode set");
    CommonFlags conv_flags;
    conv_flags.attach(converge, true);
    std::vector<double> biases;
    int true_mode = 0;
    auto* biases_opt =
        converge->add_option("--bias", biases, "mode coin biases")->delimiter(',');
    auto* true_mode_opt =
        converge->add_option("--true-mode", true_mode, "index of the true mode");

    CLI11_PARSE(app, argc, argv);

    if (app.got_subcommand(bandit)) {
        json config = load_config_file(bandit_flags.config_path);
        bandit_flags.apply(config);
        if (*levers_opt) config["levers"] = levers;
        if (*bandit_agents_opt) config["agents"] = bandit_agents;
        if (*epsilon_opt) config["epsilon"] = epsilon;
        if (*decay_opt) config["epsilon_decay"] = epsilon_decay;
        return run_and_report("bandit", config);
    }
    if (app.got_subcommand(gridworld)) {
        json config = load_config_file(grid_flags.config_path);
        grid_flags.apply(config);
        if (*map_opt) config["map_path"] = map_path;
        if (*grid_agents_opt) config["agents"] = grid_agents;
        if (*p_explore_opt) config["p_explore"] = p_explore;
        if (*window_opt) config["summary_window"] = summary_window;
        if (*sweeps_opt) config["sweeps_per_step"] = sweeps;
        return run_and_report("gridworld", config);
    }
    if (app.got_subcommand(gittins)) {
        bcr_gittins_table* table = nullptr;
        if (bcr_gittins_table_build(g_horizon, g_discount, g_tolerance,
                                    g_cache.c_str(), &table) != BCR_OK) {
            die(bcr_last_error());
        }
        double index00 = 0.0;
        if (bcr_gittins_table_index(table, 0, 0, &index00) != BCR_OK) {
            const std::string message = bcr_last_error();
            bcr_gittins_table_destroy(table);
            die(message);
        }
        const json summary = {{"horizon", g_horizon},
                              {"discount", g_discount},
                              {"tolerance", g_tolerance},
                              {"cache_dir", g_cache},
                              {"index_0_0", index00}};
        std::printf("%s\n", summary.dump(2).c_str());
        bcr_gittins_table_destroy(table);
        return 0;
    }
    if (app.got_subcommand(exp_gap)) {
        json config = load_config_file(gap_flags.config_path);
        gap_flags.apply(config, "max_steps");
        if (*k_opt) config["k_list"] = k_list;
        return run_and_report("exp_gap", config);
    }
    if (app.got_subcommand(converge)) {
        json config = load_config_file(conv_flags.config_path);
        conv_flags.apply(config);
        if (*biases_opt) config["biases"] = biases;
        if (*true_mode_opt) config["true_mode"] = true_mode;
        return run_and_report("converge", config);
    }
    return 1;
}
