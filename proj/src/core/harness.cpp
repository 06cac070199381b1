#include "core/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <memory>
#include <set>
#include <utility>

#include "core/bandit.hpp"
#include "core/divergence.hpp"
#include "core/engine.hpp"
#include "core/errors.hpp"
#include "core/gittins.hpp"
#include "core/gridworld.hpp"
#include "core/mdp_agent.hpp"
#include "core/parallel.hpp"
#include "core/svg.hpp"
#include "core/toy_worlds.hpp"

namespace bcr {

namespace {

using nlohmann::json;

// Strict field extraction: every key is type- and range-checked, and unknown
// keys are rejected so config typos fail loudly instead of silently using a
// default.
class ConfigReader {
public:
    ConfigReader(const json& j, std::string context)
        : j_(j), context_(std::move(context)) {
        if (!j.is_object()) {
            throw ConfigError(context_ + ": config must be a JSON object");
        }
    }

    int get_int(const char* key, int def, int min_value,
                int max_value = std::numeric_limits<int>::max()) {
        const json* v = find(key);
        if (v == nullptr) {
            return check_range(def, key, min_value, max_value);
        }
        if (!v->is_number_integer()) {
            throw ConfigError(context_ + ": '" + key + "' must be an integer");
        }
        return check_range(v->get<int>(), key, min_value, max_value);
    }

    std::uint64_t get_seed(const char* key, std::uint64_t def) {
        const json* v = find(key);
        if (v == nullptr) {
            return def;
        }
        if (!v->is_number_integer() || (v->is_number_integer() && v->get<double>() < 0)) {
            throw ConfigError(context_ + ": '" + key +
                              "' must be a non-negative integer");
        }
        return v->get<std::uint64_t>();
    }

    double get_double(const char* key, double def) {
        const json* v = find(key);
        if (v == nullptr) {
            return def;
        }
        if (!v->is_number()) {
            throw ConfigError(context_ + ": '" + key + "' must be a number");
        }
        return v->get<double>();
    }

    bool get_bool(const char* key, bool def) {
        const json* v = find(key);
        if (v == nullptr) {
            return def;
        }
        if (!v->is_boolean()) {
            throw ConfigError(context_ + ": '" + key + "' must be a boolean");
        }
        return v->get<bool>();
    }

    std::string get_string(const char* key, std::string def) {
        const json* v = find(key);
        if (v == nullptr) {
            return def;
        }
        if (!v->is_string()) {
            throw ConfigError(context_ + ": '" + key + "' must be a string");
        }
        return v->get<std::string>();
    }

    std::vector<std::string> get_string_list(const char* key,
                                             std::vector<std::string> def) {
        const json* v = find(key);
        if (v == nullptr) {
            return def;
        }
        if (!v->is_array()) {
            throw ConfigError(context_ + ": '" + key + "' must be an array of strings");
        }
        std::vector<std::string> out;
        for (const json& e : *v) {
            if (!e.is_string()) {
                throw ConfigError(context_ + ": '" + key +
                                  "' must be an array of strings");
            }
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    std::vector<int> get_int_list(const char* key, std::vector<int> def) {
        const json* v = find(key);
        if (v == nullptr) {
            return def;
        }
        if (!v->is_array()) {
            throw ConfigError(context_ + ": '" + key + "' must be an array of integers");
        }
        std::vector<int> out;
        for (const json& e : *v) {
            if (!e.is_number_integer()) {
                throw ConfigError(context_ + ": '" + key +
                                  "' must be an array of integers");
            }
            out.push_back(e.get<int>());
        }
        return out;
    }

    std::vector<double> get_double_list(const char* key, std::vector<double> def) {
        const json* v = find(key);
        if (v == nullptr) {
            return def;
        }
        if (!v->is_array()) {
            throw ConfigError(context_ + ": '" + key + "' must be an array of numbers");
        }
        std::vector<double> out;
        for (const json& e : *v) {
            if (!e.is_number()) {
                throw ConfigError(context_ + ": '" + key +
                                  "' must be an array of numbers");
            }
            out.push_back(e.get<double>());
        }
        return out;
    }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (used_.find(item.key()) == used_.end()) {
                throw ConfigError(context_ + ": unknown key '" + item.key() + "'");
            }
        }
    }

private:
    const json* find(const char* key) {
        used_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    int check_range(int value, const char* key, int min_value, int max_value) const {
        if (value < min_value || value > max_value) {
            throw ConfigError(context_ + ": '" + key + "' out of range");
        }
        return value;
    }

    const json& j_;
    std::string context_;
    std::set<std::string> used_;
};

void check_unit_interval(double v, const char* what, bool allow_zero, bool allow_one) {
    const bool lo_ok = allow_zero ? v >= 0.0 : v > 0.0;
    const bool hi_ok = allow_one ? v <= 1.0 : v < 1.0;
    if (std::isnan(v) || !lo_ok || !hi_ok) {
        throw ConfigError(std::string(what) + " out of range");
    }
}

std::vector<long long> make_sample_times(long long first, long long last,
                                         long long every) {
    std::vector<long long> ts;
    for (long long t = first; t <= last; t += every) {
        ts.push_back(t);
    }
    if (ts.empty() || ts.back() != last) {
        ts.push_back(last);
    }
    return ts;
}

// Reduce aligned per-run series (identical series layout in every run) into
// mean/stderr rows, grouped by series and ascending in t.
std::vector<MetricRow> aggregate_rows(const std::vector<std::vector<RunSeries>>& per_run,
                                      const std::vector<long long>& ts) {
    std::vector<MetricRow> rows;
    if (per_run.empty()) {
        return rows;
    }
    const std::size_t n_series = per_run.front().size();
    std::vector<double> values(per_run.size());
    for (std::size_t s = 0; s < n_series; ++s) {
        const RunSeries& head = per_run.front()[s];
        for (std::size_t i = 0; i < ts.size(); ++i) {
            for (std::size_t r = 0; r < per_run.size(); ++r) {
                values[r] = per_run[r][s].values[i];
            }
            const MeanStderr ms = reduce_mean_stderr(values);
            rows.push_back(
                MetricRow{ts[i], head.metric, ms.mean, ms.stderr_mean, head.agent});
        }
    }
    return rows;
}

std::vector<double> metric_means(const std::vector<MetricRow>& rows,
                                 const std::string& agent, const std::string& metric) {
    std::vector<double> out;
    for (const MetricRow& row : rows) {
        if (row.agent == agent && row.metric == metric) {
            out.push_back(row.mean);
        }
    }
    return out;
}

std::string metric_plot(const std::vector<MetricRow>& rows,
                        const std::vector<long long>& ts,
                        const std::vector<std::string>& agents,
                        const std::string& metric, const std::string& title) {
    std::vector<PlotSeries> series;
    for (const std::string& agent : agents) {
        PlotSeries s;
        s.label = agent;
        s.y = metric_means(rows, agent, metric);
        s.x.reserve(ts.size());
        for (long long t : ts) {
            s.x.push_back(static_cast<double>(t));
        }
        if (!s.y.empty()) {
            series.push_back(std::move(s));
        }
    }
    PlotOptions options;
    options.title = title;
    options.x_label = "t";
    options.y_label = metric;
    return render_svg_plot(series, options);
}

double median_of(std::vector<double> values) {
    if (values.empty()) {
        throw InvalidArgument("median of empty sample");
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) {
        return values[n / 2];
    }
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

int argmax_first(const std::vector<double>& v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i) {
        if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) {
            best = i;
        }
    }
    return best;
}

void validate_common(int runs, int steps, int record_every, int workers,
                     const char* context) {
    if (runs < 1 || steps < 1) {
        throw ConfigError(std::string(context) + ": runs and steps must be >= 1");
    }
    if (record_every < 1) {
        throw ConfigError(std::string(context) + ": record_every must be >= 1");
    }
    if (workers < 1) {
        throw ConfigError(std::string(context) + ": workers must be >= 1");
    }
}

constexpr const char* kBanditAgentNames[] = {"bcr", "egreedy", "gittins"};

void validate_bandit(const BanditConfig& cfg) {
    validate_common(cfg.runs, cfg.steps, cfg.record_every, cfg.workers, "bandit");
    if (cfg.levers < 1) {
        throw ConfigError("bandit: levers must be >= 1");
    }
    if (cfg.agents.empty()) {
        throw ConfigError("bandit: agent roster must not be empty");
    }
    std::set<std::string> seen;
    for (const std::string& name : cfg.agents) {
        if (std::find(std::begin(kBanditAgentNames), std::end(kBanditAgentNames),
                      name) == std::end(kBanditAgentNames)) {
            throw ConfigError("bandit: unknown agent '" + name + "'");
        }
        if (!seen.insert(name).second) {
            throw ConfigError("bandit: duplicate agent '" + name + "'");
        }
    }
    check_unit_interval(cfg.epsilon, "bandit: epsilon", true, true);
    check_unit_interval(cfg.epsilon_decay, "bandit: epsilon_decay", false, true);
    check_unit_interval(cfg.gittins_discount, "bandit: gittins_discount", true, false);
    if (!(cfg.gittins_tolerance > 0.0) || cfg.gittins_tolerance > 0.5) {
        throw ConfigError("bandit: gittins_tolerance out of range");
    }
    const bool wants_gittins =
        std::find(cfg.agents.begin(), cfg.agents.end(), "gittins") != cfg.agents.end();
    if (wants_gittins && cfg.gittins_horizon < cfg.steps + 1) {
        throw ConfigError("bandit: gittins_horizon must be at least steps + 1");
    }
}

struct GridAgentSpec {
    std::string name;
    bool is_bcr = false;
    double explore_c = 0.0;
};

std::vector<GridAgentSpec> parse_grid_agents(const std::vector<std::string>& names) {
    if (names.empty()) {
        throw ConfigError("gridworld: agent roster must not be empty");
    }
    std::vector<GridAgentSpec> specs;
    std::set<std::string> seen;
    for (const std::string& name : names) {
        if (!seen.insert(name).second) {
            throw ConfigError("gridworld: duplicate agent '" + name + "'");
        }
        GridAgentSpec spec;
        spec.name = name;
        if (name == "bcr") {
            spec.is_bcr = true;
        } else if (name.size() > 1 && name.front() == 'r') {
            char* end = nullptr;
            spec.explore_c = std::strtod(name.c_str() + 1, &end);
            if (end == nullptr || *end != '\0' || spec.explore_c < 0.0) {
                throw ConfigError("gridworld: unknown agent '" + name + "'");
            }
        } else {
            throw ConfigError("gridworld: unknown agent '" + name + "'");
        }
        specs.push_back(std::move(spec));
    }
    return specs;
}

void validate_gridworld(const GridworldConfig& cfg) {
    validate_common(cfg.runs, cfg.steps, cfg.record_every, cfg.workers, "gridworld");
    if (cfg.map_text.empty() && cfg.map_path.empty()) {
        throw ConfigError("gridworld: map_text or map_path is required");
    }
    parse_grid_agents(cfg.agents);
    if (cfg.summary_window < 1) {
        throw ConfigError("gridworld: summary_window must be >= 1");
    }
    check_unit_interval(cfg.p_explore, "gridworld: p_explore", true, true);
    check_unit_interval(cfg.alpha, "gridworld: alpha", true, true);
    check_unit_interval(cfg.beta, "gridworld: beta", true, true);
    if (!(cfg.lambda0 > 0.0) || !(cfg.precision > 0.0)) {
        throw ConfigError("gridworld: lambda0 and precision must be positive");
    }
    if (cfg.sweeps_per_step < 1) {
        throw ConfigError("gridworld: sweeps_per_step must be >= 1");
    }
}

void validate_exp_gap(const ExpGapConfig& cfg) {
    validate_common(cfg.runs, 1, 1, cfg.workers, "exp_gap");
    if (cfg.k_list.empty()) {
        throw ConfigError("exp_gap: k_list must not be empty");
    }
    for (int k : cfg.k_list) {
        if (k < 2 || k > 20) {
            throw ConfigError("exp_gap: every k must lie in [2, 20]");
        }
    }
    if (cfg.max_steps < 0) {
        throw ConfigError("exp_gap: max_steps must be >= 0");
    }
}

void validate_converge(const ConvergeConfig& cfg) {
    validate_common(cfg.runs, cfg.steps, cfg.record_every, cfg.workers, "converge");
    if (cfg.biases.size() < 2) {
        throw ConfigError("converge: need at least two mode biases");
    }
    for (double b : cfg.biases) {
        check_unit_interval(b, "converge: bias", false, false);
    }
    if (cfg.true_mode < 0 || cfg.true_mode >= static_cast<int>(cfg.biases.size())) {
        throw ConfigError("converge: true_mode out of range");
    }
    if (cfg.tv_checkpoint < 1 || cfg.tv_checkpoint > cfg.steps - 1) {
        throw ConfigError("converge: tv_checkpoint must lie in [1, steps - 1]");
    }
    check_unit_interval(cfg.tv_threshold, "converge: tv_threshold", false, true);
    if (cfg.floor_after < 0 || cfg.floor_after > cfg.steps) {
        throw ConfigError("converge: floor_after must lie in [0, steps]");
    }
    check_unit_interval(cfg.floor, "converge: floor", false, false);
    if (cfg.monte_carlo < 2) {
        throw ConfigError("converge: monte_carlo must be >= 2");
    }
    if (cfg.diagnostic_runs < 1) {
        throw ConfigError("converge: diagnostic_runs must be >= 1");
    }
}

void attach_common_outputs(ExperimentArtifacts& artifacts,
                           const std::vector<std::string>& agents,
                           const std::vector<std::string>& metrics,
                           const std::string& title_prefix) {
    artifacts.files.emplace_back("metrics.csv", format_csv(artifacts.rows));
    for (const std::string& metric : metrics) {
        artifacts.files.emplace_back(
            metric + ".svg", metric_plot(artifacts.rows, artifacts.sample_times, agents,
                                         metric, title_prefix + ": " + metric));
    }
}

void attach_summary_file(ExperimentArtifacts& artifacts) {
    artifacts.files.emplace_back("summary.json", artifacts.summary.dump(2) + "\n");
}

}  // namespace

MeanStderr reduce_mean_stderr(const std::vector<double>& values) {
    if (values.empty()) {
        throw InvalidArgument("mean/stderr of empty sample");
    }
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    const double mean = sum / n;
    if (values.size() == 1) {
        return MeanStderr{mean, 0.0};
    }
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    const double var = ss / (n - 1.0);
    return MeanStderr{mean, std::sqrt(var / n)};
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

BanditConfig parse_bandit_config(const json& j) {
    BanditConfig cfg;
    ConfigReader r(j, "bandit");
    cfg.levers = r.get_int("levers", cfg.levers, 1);
    cfg.steps = r.get_int("steps", cfg.steps, 1);
    cfg.runs = r.get_int("runs", cfg.runs, 1);
    cfg.seed = r.get_seed("seed", cfg.seed);
    cfg.record_every = r.get_int("record_every", cfg.record_every, 1);
    cfg.agents = r.get_string_list("agents", cfg.agents);
    cfg.epsilon = r.get_double("epsilon", cfg.epsilon);
    cfg.epsilon_decay = r.get_double("epsilon_decay", cfg.epsilon_decay);
    cfg.gittins_horizon = r.get_int("gittins_horizon", cfg.gittins_horizon, 1);
    cfg.gittins_discount = r.get_double("gittins_discount", cfg.gittins_discount);
    cfg.gittins_tolerance = r.get_double("gittins_tolerance", cfg.gittins_tolerance);
    cfg.gittins_cache_dir = r.get_string("gittins_cache_dir", cfg.gittins_cache_dir);
    cfg.workers = r.get_int("workers", cfg.workers, 1);
    cfg.keep_run_logs = r.get_bool("keep_run_logs", cfg.keep_run_logs);
    cfg.out_dir = r.get_string("out_dir", cfg.out_dir);
    r.finish();
    validate_bandit(cfg);
    return cfg;
}

GridworldConfig parse_gridworld_config(const json& j) {
    GridworldConfig cfg;
    ConfigReader r(j, "gridworld");
    cfg.map_text = r.get_string("map_text", cfg.map_text);
    cfg.map_path = r.get_string("map_path", cfg.map_path);
    cfg.steps = r.get_int("steps", cfg.steps, 1);
    cfg.runs = r.get_int("runs", cfg.runs, 1);
    cfg.seed = r.get_seed("seed", cfg.seed);
    cfg.record_every = r.get_int("record_every", cfg.record_every, 1);
    cfg.agents = r.get_string_list("agents", cfg.agents);
    cfg.summary_window = r.get_int("summary_window", cfg.summary_window, 1);
    cfg.p_explore = r.get_double("p_explore", cfg.p_explore);
    cfg.alpha = r.get_double("alpha", cfg.alpha);
    cfg.beta = r.get_double("beta", cfg.beta);
    cfg.rho_greedy_only = r.get_bool("rho_greedy_only", cfg.rho_greedy_only);
    cfg.mu0 = r.get_double("mu0", cfg.mu0);
    cfg.lambda0 = r.get_double("lambda0", cfg.lambda0);
    cfg.precision = r.get_double("precision", cfg.precision);
    cfg.sweeps_per_step = r.get_int("sweeps_per_step", cfg.sweeps_per_step, 1);
    cfg.workers = r.get_int("workers", cfg.workers, 1);
    cfg.keep_run_logs = r.get_bool("keep_run_logs", cfg.keep_run_logs);
    cfg.out_dir = r.get_string("out_dir", cfg.out_dir);
    r.finish();
    validate_gridworld(cfg);
    return cfg;
}

ExpGapConfig parse_exp_gap_config(const json& j) {
    ExpGapConfig cfg;
    ConfigReader r(j, "exp_gap");
    cfg.k_list = r.get_int_list("k_list", cfg.k_list);
    cfg.runs = r.get_int("runs", cfg.runs, 1);
    cfg.seed = r.get_seed("seed", cfg.seed);
    cfg.max_steps = r.get_int("max_steps", cfg.max_steps, 0);
    cfg.workers = r.get_int("workers", cfg.workers, 1);
    cfg.keep_run_logs = r.get_bool("keep_run_logs", cfg.keep_run_logs);
    cfg.out_dir = r.get_string("out_dir", cfg.out_dir);
    r.finish();
    validate_exp_gap(cfg);
    return cfg;
}

ConvergeConfig parse_converge_config(const json& j) {
    ConvergeConfig cfg;
    ConfigReader r(j, "converge");
    cfg.biases = r.get_double_list("biases", cfg.biases);
    cfg.true_mode = r.get_int("true_mode", cfg.true_mode, 0);
    cfg.steps = r.get_int("steps", cfg.steps, 1);
    cfg.runs = r.get_int("runs", cfg.runs, 1);
    cfg.seed = r.get_seed("seed", cfg.seed);
    cfg.record_every = r.get_int("record_every", cfg.record_every, 1);
    cfg.tv_checkpoint = r.get_int("tv_checkpoint", cfg.tv_checkpoint, 1);
    cfg.tv_threshold = r.get_double("tv_threshold", cfg.tv_threshold);
    cfg.floor_after = r.get_int("floor_after", cfg.floor_after, 0);
    cfg.floor = r.get_double("floor", cfg.floor);
    cfg.monte_carlo = r.get_int("monte_carlo", cfg.monte_carlo, 2);
    cfg.diagnostic_runs = r.get_int("diagnostic_runs", cfg.diagnostic_runs, 1);
    cfg.workers = r.get_int("workers", cfg.workers, 1);
    cfg.keep_run_logs = r.get_bool("keep_run_logs", cfg.keep_run_logs);
    cfg.out_dir = r.get_string("out_dir", cfg.out_dir);
    r.finish();
    validate_converge(cfg);
    return cfg;
}

// ---------------------------------------------------------------------------
// Bandit experiment
// ---------------------------------------------------------------------------

namespace {

std::vector<RunSeries> bandit_single_run(const BanditConfig& cfg,
                                         const GittinsTable* table, int run,
                                         const std::vector<long long>& ts) {
    Rng bias_rng = make_rng(sub_seed(cfg.seed + static_cast<std::uint64_t>(run), 0));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    BanditEnv env;
    env.biases.resize(static_cast<std::size_t>(cfg.levers));
    for (double& b : env.biases) {
        b = unit(bias_rng);
    }
    const int best = argmax_first(env.biases);

    std::vector<RunSeries> out;
    for (std::size_t agent_idx = 0; agent_idx < cfg.agents.size(); ++agent_idx) {
        const std::string& name = cfg.agents[agent_idx];
        Rng rng = make_rng(
            sub_seed(cfg.seed + static_cast<std::uint64_t>(run), 1 + agent_idx));
        BanditStats stats(cfg.levers);
        double cum = 0.0;
        std::size_t next_sample = 0;
        RunSeries avg{name, "avg_reward", {}};
        RunSeries best_frac{name, "best_lever", {}};
        avg.values.reserve(ts.size());
        best_frac.values.reserve(ts.size());
        for (long long t = 1; t <= cfg.steps; ++t) {
            int lever = 0;
            if (name == "bcr") {
                lever = thompson_act(stats, rng);
            } else if (name == "egreedy") {
                lever = epsilon_greedy_act(stats, t - 1, cfg.epsilon, cfg.epsilon_decay,
                                           rng);
            } else {
                lever = gittins_act(stats, *table, rng);
            }
            const int reward = bandit_step(env, lever, rng);
            stats = bandit_update(std::move(stats), lever, reward);
            cum += reward;
            if (next_sample < ts.size() && ts[next_sample] == t) {
                avg.values.push_back(cum / static_cast<double>(t));
                best_frac.values.push_back(lever == best ? 1.0 : 0.0);
                ++next_sample;
            }
        }
        out.push_back(std::move(avg));
        out.push_back(std::move(best_frac));
    }
    return out;
}

}  // namespace

ExperimentArtifacts run_bandit_experiment(const BanditConfig& cfg) {
    validate_bandit(cfg);

    std::shared_ptr<GittinsTable> table;
    if (std::find(cfg.agents.begin(), cfg.agents.end(), "gittins") !=
        cfg.agents.end()) {
        table = std::make_shared<GittinsTable>(
            GittinsTable::load_or_compute(cfg.gittins_horizon, cfg.gittins_discount,
                                          cfg.gittins_tolerance, cfg.gittins_cache_dir));
    }

    ExperimentArtifacts artifacts;
    artifacts.sample_times = make_sample_times(1, cfg.steps, cfg.record_every);

    std::vector<std::vector<RunSeries>> per_run(static_cast<std::size_t>(cfg.runs));
    parallel_for(cfg.runs, cfg.workers, [&](int run) {
        per_run[static_cast<std::size_t>(run)] =
            bandit_single_run(cfg, table.get(), run, artifacts.sample_times);
    });
    artifacts.rows = aggregate_rows(per_run, artifacts.sample_times);

    json final_values = json::object();
    for (const std::string& agent : cfg.agents) {
        final_values[agent] = {
            {"avg_reward", metric_means(artifacts.rows, agent, "avg_reward").back()},
            {"best_lever", metric_means(artifacts.rows, agent, "best_lever").back()}};
    }
    artifacts.summary = {{"experiment", "bandit"}, {"levers", cfg.levers},
                         {"steps", cfg.steps},     {"runs", cfg.runs},
                         {"seed", cfg.seed},       {"final", final_values}};

    attach_common_outputs(artifacts, cfg.agents, {"avg_reward", "best_lever"},
                          "bandit");
    attach_summary_file(artifacts);
    if (cfg.keep_run_logs) {
        artifacts.run_logs = std::move(per_run);
    }
    return artifacts;
}

// ---------------------------------------------------------------------------
// Grid-world experiment
// ---------------------------------------------------------------------------

namespace {

struct GridRunOut {
    RunSeries series;
    double window_reward = 0.0;  // mean reward over the final summary window
    std::vector<std::int64_t> visits_first;
    std::vector<std::int64_t> visits_last;
    std::vector<std::int64_t> actions_first;  // cells * kGridActions
    std::vector<std::int64_t> actions_last;
};

GridRunOut gridworld_single_run(const GridworldConfig& cfg, const GridMap& map,
                                const GridAgentSpec& spec, int run,
                                std::size_t agent_idx,
                                const std::vector<long long>& ts) {
    Rng rng = make_rng(sub_seed(cfg.seed + static_cast<std::uint64_t>(run), agent_idx));
    GridworldSim sim(map, rng);

    std::unique_ptr<GridAgent> agent;
    if (spec.is_bcr) {
        BcrMdpParams params;
        params.mu0 = cfg.mu0;
        params.lambda0 = cfg.lambda0;
        params.precision = cfg.precision;
        params.sweeps_per_step = cfg.sweeps_per_step;
        agent = std::make_unique<BcrMdpAgent>(map.cells(), kGridActions, params, rng);
    } else {
        RLearningParams params;
        params.alpha = cfg.alpha;
        params.beta = cfg.beta;
        params.explore_c = spec.explore_c;
        params.p_explore = cfg.p_explore;
        params.rho_greedy_only = cfg.rho_greedy_only;
        agent = std::make_unique<RLearningAgent>(map.cells(), kGridActions, params);
    }

    GridRunOut out;
    out.series = RunSeries{spec.name, "avg_reward", {}};
    out.series.values.reserve(ts.size());
    out.visits_first.assign(static_cast<std::size_t>(map.cells()), 0);
    out.visits_last.assign(static_cast<std::size_t>(map.cells()), 0);
    out.actions_first.assign(static_cast<std::size_t>(map.cells()) * kGridActions, 0);
    out.actions_last.assign(static_cast<std::size_t>(map.cells()) * kGridActions, 0);

    const long long window = std::min(cfg.summary_window, cfg.steps);
    const long long steps = cfg.steps;
    double cum = 0.0;
    double cum_before_window = 0.0;
    std::size_t next_sample = 0;
    for (long long t = 1; t <= steps; ++t) {
        const int x = sim.state();
        const int a = agent->act(x, rng);
        const GridTransition tr = sim.step(a, rng);
        agent->observe(x, a, tr.reward, sim.state(), rng);
        cum += tr.reward;
        if (t <= window) {
            out.visits_first[static_cast<std::size_t>(x)] += 1;
            out.actions_first[static_cast<std::size_t>(x * kGridActions + a)] += 1;
        }
        if (t > steps - window) {
            out.visits_last[static_cast<std::size_t>(x)] += 1;
            out.actions_last[static_cast<std::size_t>(x * kGridActions + a)] += 1;
        }
        if (t == steps - window) {
            cum_before_window = cum;
        }
        if (next_sample < ts.size() && ts[next_sample] == t) {
            out.series.values.push_back(cum / static_cast<double>(t));
            ++next_sample;
        }
    }
    out.window_reward = (cum - cum_before_window) / static_cast<double>(window);
    return out;
}

std::string format_occupancy_csv(const GridMap& map,
                                 const std::vector<GridAgentSpec>& specs,
                                 const std::vector<GridRunOut>& outs, int runs) {
    constexpr char kActionLetters[] = "NESW";
    std::string csv = "agent,window,cell,col,row,visits,top_action\n";
    const int cells = map.cells();
    for (std::size_t a = 0; a < specs.size(); ++a) {
        for (int which = 0; which < 2; ++which) {
            for (int cell = 0; cell < cells; ++cell) {
                std::int64_t visits = 0;
                std::int64_t counts[kGridActions] = {0, 0, 0, 0};
                for (int run = 0; run < runs; ++run) {
                    const GridRunOut& out =
                        outs[static_cast<std::size_t>(run) * specs.size() + a];
                    const auto& vis = which == 0 ? out.visits_first : out.visits_last;
                    const auto& act = which == 0 ? out.actions_first : out.actions_last;
                    visits += vis[static_cast<std::size_t>(cell)];
                    for (int d = 0; d < kGridActions; ++d) {
                        counts[d] += act[static_cast<std::size_t>(cell * kGridActions + d)];
                    }
                }
                int top = -1;
                std::int64_t top_count = 0;
                for (int d = 0; d < kGridActions; ++d) {
                    if (counts[d] > top_count) {
                        top_count = counts[d];
                        top = d;
                    }
                }
                csv += specs[a].name;
                csv += which == 0 ? ",first," : ",last,";
                csv += std::to_string(cell);
                csv += ',';
                csv += std::to_string(map.col_of(cell));
                csv += ',';
                csv += std::to_string(map.row_of(cell));
                csv += ',';
                csv += std::to_string(visits);
                csv += ',';
                csv += top < 0 ? '-' : kActionLetters[top];
                csv += '\n';
            }
        }
    }
    return csv;
}

}  // namespace

ExperimentArtifacts run_gridworld_experiment(const GridworldConfig& cfg) {
    validate_gridworld(cfg);
    const std::vector<GridAgentSpec> specs = parse_grid_agents(cfg.agents);
    const std::string map_text =
        !cfg.map_text.empty() ? cfg.map_text : read_text_file(cfg.map_path);
    const GridMap map = parse_grid_map(map_text);

    ExperimentArtifacts artifacts;
    artifacts.sample_times = make_sample_times(1, cfg.steps, cfg.record_every);

    const std::size_t n_agents = specs.size();
    std::vector<GridRunOut> outs(static_cast<std::size_t>(cfg.runs) * n_agents);
    parallel_for(cfg.runs * static_cast<int>(n_agents), cfg.workers, [&](int i) {
        const int run = i / static_cast<int>(n_agents);
        const std::size_t a = static_cast<std::size_t>(i) % n_agents;
        outs[static_cast<std::size_t>(i)] = gridworld_single_run(
            cfg, map, specs[a], run, a, artifacts.sample_times);
    });

    std::vector<std::vector<RunSeries>> per_run(static_cast<std::size_t>(cfg.runs));
    for (int run = 0; run < cfg.runs; ++run) {
        auto& series = per_run[static_cast<std::size_t>(run)];
        for (std::size_t a = 0; a < n_agents; ++a) {
            series.push_back(outs[static_cast<std::size_t>(run) * n_agents + a].series);
        }
    }
    artifacts.rows = aggregate_rows(per_run, artifacts.sample_times);

    json agent_summaries = json::object();
    for (std::size_t a = 0; a < n_agents; ++a) {
        std::vector<double> windows;
        for (int run = 0; run < cfg.runs; ++run) {
            windows.push_back(
                outs[static_cast<std::size_t>(run) * n_agents + a].window_reward);
        }
        const MeanStderr ms = reduce_mean_stderr(windows);
        const double std_dev =
            ms.stderr_mean * std::sqrt(static_cast<double>(windows.size()));
        agent_summaries[specs[a].name] = {{"window_reward_mean", ms.mean},
                                          {"window_reward_std", std_dev}};
    }
    artifacts.summary = {{"experiment", "gridworld"},
                         {"width", map.width},
                         {"height", map.height},
                         {"steps", cfg.steps},
                         {"runs", cfg.runs},
                         {"seed", cfg.seed},
                         {"summary_window", cfg.summary_window},
                         {"agents", agent_summaries}};

    attach_common_outputs(artifacts, cfg.agents, {"avg_reward"}, "gridworld");
    artifacts.files.emplace_back("occupancy.csv",
                                 format_occupancy_csv(map, specs, outs, cfg.runs));
    attach_summary_file(artifacts);
    if (cfg.keep_run_logs) {
        artifacts.run_logs = std::move(per_run);
    }
    return artifacts;
}

// ---------------------------------------------------------------------------
// Exponential-gap experiment
// ---------------------------------------------------------------------------

namespace {

long long exp_gap_cap(const ExpGapConfig& cfg, int k) {
    if (cfg.max_steps > 0) {
        return cfg.max_steps;
    }
    return std::max<long long>(1000, 200LL << k);
}

long long exp_gap_single_run(const ExpGapConfig& cfg, int k, std::size_t k_idx,
                             int run) {
    const int truth = run % 2;
    const Environment env = make_consecutive_run_environment(k, truth);
    const ModeSet ms = make_consecutive_run_mode_set(k);
    BcrAgent agent(ms);
    Rng rng =
        make_rng(sub_seed(cfg.seed + static_cast<std::uint64_t>(run), 100 + k_idx));
    InteractionHistory history;
    const long long cap = exp_gap_cap(cfg, k);
    for (long long t = 1; t <= cap; ++t) {
        const int action = agent.act(history, rng);
        Step step = env.respond(history, action, rng);
        step.action = action;
        agent.update(history, step);
        history.push(step);
        if (step.observation == 1) {
            return t;
        }
    }
    return cap;
}

}  // namespace

ExperimentArtifacts run_exponential_gap_experiment(const ExpGapConfig& cfg) {
    validate_exp_gap(cfg);

    ExperimentArtifacts artifacts;
    for (int k : cfg.k_list) {
        artifacts.sample_times.push_back(k);
    }

    const std::size_t n_k = cfg.k_list.size();
    std::vector<std::vector<double>> hits(n_k,
                                          std::vector<double>(cfg.runs, 0.0));
    parallel_for(static_cast<int>(n_k) * cfg.runs, cfg.workers, [&](int i) {
        const std::size_t k_idx = static_cast<std::size_t>(i) / cfg.runs;
        const int run = i % cfg.runs;
        hits[k_idx][static_cast<std::size_t>(run)] = static_cast<double>(
            exp_gap_single_run(cfg, cfg.k_list[k_idx], k_idx, run));
    });

    json medians_bcr = json::array();
    json medians_probe = json::array();
    std::vector<MetricRow> rows;
    for (std::size_t k_idx = 0; k_idx < n_k; ++k_idx) {
        const int k = cfg.k_list[k_idx];
        std::vector<double> probe(static_cast<std::size_t>(cfg.runs));
        for (int run = 0; run < cfg.runs; ++run) {
            probe[static_cast<std::size_t>(run)] =
                run % 2 == 0 ? static_cast<double>(k) : 2.0 * k;
        }
        const double med_bcr = median_of(hits[k_idx]);
        const double med_probe = median_of(probe);
        const MeanStderr mean_bcr = reduce_mean_stderr(hits[k_idx]);
        const MeanStderr mean_probe = reduce_mean_stderr(probe);
        rows.push_back(MetricRow{k, "median_steps", med_bcr, 0.0, "bcr"});
        rows.push_back(MetricRow{k, "median_steps", med_probe, 0.0, "probe"});
        rows.push_back(
            MetricRow{k, "mean_steps", mean_bcr.mean, mean_bcr.stderr_mean, "bcr"});
        rows.push_back(MetricRow{k, "mean_steps", mean_probe.mean,
                                 mean_probe.stderr_mean, "probe"});
        medians_bcr.push_back(med_bcr);
        medians_probe.push_back(med_probe);
    }
    // Regroup so each (agent, metric) block is contiguous and ascending in k.
    std::stable_sort(rows.begin(), rows.end(),
                     [](const MetricRow& a, const MetricRow& b) {
                         if (a.agent != b.agent) return a.agent < b.agent;
                         if (a.metric != b.metric) return a.metric < b.metric;
                         return a.t < b.t;
                     });
    artifacts.rows = std::move(rows);

    artifacts.summary = {{"experiment", "exp_gap"},
                         {"runs", cfg.runs},
                         {"seed", cfg.seed},
                         {"k_list", cfg.k_list},
                         {"median_steps_bcr", medians_bcr},
                         {"median_steps_probe", medians_probe}};

    attach_common_outputs(artifacts, {"bcr", "probe"}, {"median_steps", "mean_steps"},
                          "first reward hitting time");
    attach_summary_file(artifacts);
    if (cfg.keep_run_logs) {
        artifacts.run_logs.resize(static_cast<std::size_t>(cfg.runs));
        for (int run = 0; run < cfg.runs; ++run) {
            RunSeries bcr_series{"bcr", "steps", {}};
            RunSeries probe_series{"probe", "steps", {}};
            for (std::size_t k_idx = 0; k_idx < n_k; ++k_idx) {
                bcr_series.values.push_back(hits[k_idx][static_cast<std::size_t>(run)]);
                probe_series.values.push_back(run % 2 == 0
                                                  ? static_cast<double>(cfg.k_list[k_idx])
                                                  : 2.0 * cfg.k_list[k_idx]);
            }
            artifacts.run_logs[static_cast<std::size_t>(run)] = {
                std::move(bcr_series), std::move(probe_series)};
        }
    }
    return artifacts;
}

// ---------------------------------------------------------------------------
// Convergence experiment
// ---------------------------------------------------------------------------

namespace {

struct ConvergeRunOut {
    RunSeries tv_series;
    RunSeries post_series;
    double tv_at_checkpoint = 1.0;
    double min_post_after = 1.0;
    double identity_error = 0.0;
    double bound_violation = 0.0;
    RecordedRun recorded;  // populated only for the first diagnostic_runs runs
    bool has_recorded = false;
};

ConvergeRunOut converge_single_run(const ConvergeConfig& cfg, const ModeSet& ms,
                                   const Environment& env, int run,
                                   const std::vector<long long>& ts) {
    RecordedRun rec = record_bcr_run(
        ms, env, cfg.steps, sub_seed(cfg.seed + static_cast<std::uint64_t>(run), 0));
    const int m_star = cfg.true_mode;
    const std::vector<double> tv = convergence_monitor(rec, ms, m_star);

    ConvergeRunOut out;
    out.tv_series = RunSeries{"bcr", "tv", {}};
    out.post_series = RunSeries{"bcr", "posterior_mstar", {}};
    for (long long t : ts) {
        out.tv_series.values.push_back(tv[static_cast<std::size_t>(t)]);
        out.post_series.values.push_back(
            rec.posteriors[static_cast<std::size_t>(t)].probability(m_star));
    }
    out.tv_at_checkpoint = tv[static_cast<std::size_t>(cfg.tv_checkpoint)];
    for (int t = cfg.floor_after; t <= cfg.steps; ++t) {
        out.min_post_after = std::min(
            out.min_post_after,
            rec.posteriors[static_cast<std::size_t>(t)].probability(m_star));
    }

    for (int m = 0; m < ms.size(); ++m) {
        if (m == m_star) {
            continue;
        }
        const DivergenceTrace trace =
            build_divergence_trace(rec.history, ms, m_star, m, rec.acting_modes);
        const std::vector<double> g = decompose_subdivergences(trace, ms.size());
        double g_total = 0.0;
        for (double v : g) {
            g_total += v;
        }
        out.identity_error =
            std::max(out.identity_error, std::abs(g_total - trace.total()));

        const std::vector<double> d = trace.partial_sums();
        const double log_prior_ratio =
            std::log(ms.prior[static_cast<std::size_t>(m)]) -
            std::log(ms.prior[static_cast<std::size_t>(m_star)]);
        for (int t = 1; t <= cfg.steps; ++t) {
            const double bound =
                std::exp(log_prior_ratio - d[static_cast<std::size_t>(t - 1)]);
            const double p =
                rec.posteriors[static_cast<std::size_t>(t)].probability(m);
            out.bound_violation = std::max(out.bound_violation, p - bound);
        }
    }

    if (run < std::min(cfg.diagnostic_runs, cfg.runs)) {
        out.recorded = std::move(rec);
        out.has_recorded = true;
    }
    return out;
}

}  // namespace

ExperimentArtifacts run_convergence_experiment(const ConvergeConfig& cfg) {
    validate_converge(cfg);
    const ModeSet ms = make_coin_mode_set(cfg.biases);
    const Environment env =
        make_coin_environment(cfg.biases[static_cast<std::size_t>(cfg.true_mode)]);
    const int m_star = cfg.true_mode;

    ExperimentArtifacts artifacts;
    artifacts.sample_times = make_sample_times(0, cfg.steps - 1, cfg.record_every);

    std::vector<ConvergeRunOut> outs(static_cast<std::size_t>(cfg.runs));
    parallel_for(cfg.runs, cfg.workers, [&](int run) {
        outs[static_cast<std::size_t>(run)] =
            converge_single_run(cfg, ms, env, run, artifacts.sample_times);
    });

    std::vector<std::vector<RunSeries>> per_run(static_cast<std::size_t>(cfg.runs));
    int converged = 0;
    double min_post = 1.0;
    double identity_error = 0.0;
    double bound_violation = 0.0;
    std::vector<RecordedRun> diagnostics;
    for (int run = 0; run < cfg.runs; ++run) {
        ConvergeRunOut& out = outs[static_cast<std::size_t>(run)];
        per_run[static_cast<std::size_t>(run)] = {out.tv_series, out.post_series};
        if (out.tv_at_checkpoint < cfg.tv_threshold) {
            ++converged;
        }
        min_post = std::min(min_post, out.min_post_after);
        identity_error = std::max(identity_error, out.identity_error);
        bound_violation = std::max(bound_violation, out.bound_violation);
        if (out.has_recorded) {
            diagnostics.push_back(std::move(out.recorded));
        }
    }
    artifacts.rows = aggregate_rows(per_run, artifacts.sample_times);

    json boundedness = json::array();
    for (int m = 0; m < ms.size(); ++m) {
        if (m == m_star) {
            continue;
        }
        const BoundednessReport report = empirical_boundedness(
            diagnostics, ms, m_star, m, cfg.monte_carlo, sub_seed(cfg.seed, 999));
        for (const BoundednessEntry& entry : report.entries) {
            if (entry.insufficient) {
                continue;
            }
            boundedness.push_back({{"competitor", m},
                                   {"policy_mode", entry.policy_mode},
                                   {"sample_count", entry.sample_count},
                                   {"realized", entry.realized},
                                   {"estimate_mean", entry.estimate_mean},
                                   {"estimate_stderr", entry.estimate_stderr},
                                   {"max_abs_deviation", entry.max_abs_deviation}});
        }
    }

    artifacts.summary = {
        {"experiment", "converge"},
        {"runs", cfg.runs},
        {"steps", cfg.steps},
        {"seed", cfg.seed},
        {"biases", cfg.biases},
        {"true_mode", cfg.true_mode},
        {"fraction_converged",
         static_cast<double>(converged) / static_cast<double>(cfg.runs)},
        {"tv_checkpoint", cfg.tv_checkpoint},
        {"tv_threshold", cfg.tv_threshold},
        {"min_posterior_after",
         {{"from_step", cfg.floor_after},
          {"value", min_post},
          {"floor", cfg.floor},
          {"ok", min_post >= cfg.floor}}},
        {"subdivergence_identity_max_error", identity_error},
        {"posterior_bound_max_violation", bound_violation},
        {"boundedness", boundedness}};

    attach_common_outputs(artifacts, {"bcr"}, {"tv", "posterior_mstar"},
                          "posterior convergence");
    const int first_competitor = m_star == 0 ? 1 : 0;
    artifacts.files.emplace_back(
        "divergence.csv",
        format_divergence_csv(diagnostics.front(), ms, m_star, first_competitor));
    attach_summary_file(artifacts);
    if (cfg.keep_run_logs) {
        artifacts.run_logs = std::move(per_run);
    }
    return artifacts;
}

// ---------------------------------------------------------------------------
// Dispatch and output
// ---------------------------------------------------------------------------

ExperimentArtifacts run_experiment(const std::string& kind, const json& config) {
    ExperimentArtifacts artifacts;
    std::string out_dir;
    if (kind == "bandit") {
        const BanditConfig cfg = parse_bandit_config(config);
        out_dir = cfg.out_dir;
        artifacts = run_bandit_experiment(cfg);
    } else if (kind == "gridworld") {
        const GridworldConfig cfg = parse_gridworld_config(config);
        out_dir = cfg.out_dir;
        artifacts = run_gridworld_experiment(cfg);
    } else if (kind == "exp_gap") {
        const ExpGapConfig cfg = parse_exp_gap_config(config);
        out_dir = cfg.out_dir;
        artifacts = run_exponential_gap_experiment(cfg);
    } else if (kind == "converge") {
        const ConvergeConfig cfg = parse_converge_config(config);
        out_dir = cfg.out_dir;
        artifacts = run_convergence_experiment(cfg);
    } else {
        throw ConfigError("unknown experiment kind '" + kind + "'");
    }
    if (!out_dir.empty()) {
        write_artifacts(out_dir, artifacts);
    }
    return artifacts;
}

void write_artifacts(const std::string& out_dir, const ExperimentArtifacts& artifacts) {
    if (out_dir.empty()) {
        throw InvalidArgument("output directory must not be empty");
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create output directory '" + out_dir + "': " +
                      ec.message());
    }
    for (const auto& [name, content] : artifacts.files) {
        write_text_file((std::filesystem::path(out_dir) / name).string(), content);
    }
}

}  // namespace bcr
