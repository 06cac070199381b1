#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "core/csv.hpp"
#include "core/errors.hpp"
#include "core/gridworld.hpp"
#include "core/harness.hpp"
#include "core/svg.hpp"

using namespace bcr;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Minimal XML well-formedness scan: every opening tag is closed in order and
// the document has a single svg root.
bool svg_well_formed(const std::string& doc) {
    std::vector<std::string> stack;
    bool saw_root = false;
    std::size_t i = 0;
    while ((i = doc.find('<', i)) != std::string::npos) {
        const std::size_t end = doc.find('>', i);
        if (end == std::string::npos) return false;
        std::string tag = doc.substr(i + 1, end - i - 1);
        i = end + 1;
        if (!tag.empty() && tag.front() == '?') continue;  // declaration
        if (!tag.empty() && tag.front() == '!') continue;  // comment/doctype
        const bool closing = !tag.empty() && tag.front() == '/';
        const bool self_closing = !tag.empty() && tag.back() == '/';
        if (closing) tag.erase(0, 1);
        if (self_closing) tag.pop_back();
        std::string name;
        for (char c : tag) {
            if (std::isspace(static_cast<unsigned char>(c))) break;
            name += c;
        }
        if (name.empty()) return false;
        if (closing) {
            if (stack.empty() || stack.back() != name) return false;
            stack.pop_back();
        } else if (!self_closing) {
            if (stack.empty() && saw_root) return false;  // second root
            if (stack.empty()) {
                if (name != "svg") return false;
                saw_root = true;
            }
            stack.push_back(name);
        }
    }
    return saw_root && stack.empty();
}

fs::path fresh_temp_dir(const char* tag) {
    fs::path dir = fs::temp_directory_path() / tag;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

using RowKey = std::tuple<std::string, std::string, long long>;

std::map<RowKey, MetricRow> row_lookup(const std::vector<MetricRow>& rows) {
    std::map<RowKey, MetricRow> out;
    for (const MetricRow& r : rows) {
        out[{r.agent, r.metric, r.t}] = r;
    }
    return out;
}

json small_bandit_config() {
    return json{{"levers", 3}, {"steps", 30},        {"runs", 4},
                {"seed", 7},   {"record_every", 10}, {"agents", {"bcr", "egreedy"}}};
}

}  // namespace

TEST_CASE("configs parse with defaults and reject junk") {
    const BanditConfig def = parse_bandit_config(json::object());
    CHECK(def.levers == 10);
    CHECK(def.steps == 1000);
    CHECK(def.runs == 200);
    CHECK(def.agents == std::vector<std::string>{"bcr", "egreedy", "gittins"});
    CHECK(def.gittins_horizon == 1300);
    CHECK(def.gittins_discount == 0.999);

    const BanditConfig cfg = parse_bandit_config(small_bandit_config());
    CHECK(cfg.levers == 3);
    CHECK(cfg.steps == 30);
    CHECK(cfg.agents == std::vector<std::string>{"bcr", "egreedy"});

    CHECK_THROWS_AS(parse_bandit_config(json{{"turbo", true}}), ConfigError);
    CHECK_THROWS_AS(parse_bandit_config(json{{"steps", "many"}}), ConfigError);
    CHECK_THROWS_AS(parse_bandit_config(json{{"steps", 0}}), ConfigError);
    CHECK_THROWS_AS(parse_bandit_config(json{{"levers", -2}}), ConfigError);
    CHECK_THROWS_AS(parse_bandit_config(json{{"agents", {"bcr", "bcr"}}}), ConfigError);
    CHECK_THROWS_AS(parse_bandit_config(json{{"agents", {"psychic"}}}), ConfigError);
    CHECK_THROWS_AS(parse_bandit_config(json::array()), ConfigError);

    const GridworldConfig gdef = parse_gridworld_config(
        json{{"map_text", default_membrane_map_text()}});
    CHECK(gdef.steps == 300000);
    CHECK(gdef.runs == 10);
    CHECK(gdef.summary_window == 5000);
    CHECK(gdef.p_explore == 1.0);
    CHECK(gdef.agents == std::vector<std::string>{"bcr", "r5", "r30", "r200"});
    CHECK_THROWS_AS(parse_gridworld_config(json{{"map_text", "G.\n"}, {"alpha", "x"}}),
                    ConfigError);

    CHECK_THROWS_AS(parse_exp_gap_config(json{{"k_list", json::array()}}), ConfigError);
    CHECK_THROWS_AS(parse_exp_gap_config(json{{"k_list", {1}}}), ConfigError);
    CHECK_THROWS_AS(parse_exp_gap_config(json{{"k_list", {21}}}), ConfigError);

    CHECK_THROWS_AS(parse_converge_config(json{{"biases", {0.5}}}), ConfigError);
    CHECK_THROWS_AS(parse_converge_config(json{{"true_mode", 5}}), ConfigError);
    CHECK_THROWS_AS(parse_converge_config(json{{"steps", 100}, {"tv_checkpoint", 100}}),
                    ConfigError);
}

TEST_CASE("a single lever is always the best lever") {
    BanditConfig cfg = parse_bandit_config(
        json{{"levers", 1}, {"steps", 20}, {"runs", 3}, {"agents", {"bcr"}}});
    const ExperimentArtifacts artifacts = run_bandit_experiment(cfg);
    int best_rows = 0;
    for (const MetricRow& row : artifacts.rows) {
        if (row.metric != "best_lever") continue;
        ++best_rows;
        CHECK(row.mean == 1.0);
        CHECK(row.stderr_mean == 0.0);
    }
    CHECK(best_rows == 20);
    CHECK(artifacts.summary["final"]["bcr"]["best_lever"] == 1.0);
}

TEST_CASE("artifacts are a pure function of config and seed") {
    BanditConfig cfg = parse_bandit_config(small_bandit_config());
    const ExperimentArtifacts a = run_bandit_experiment(cfg);
    const ExperimentArtifacts b = run_bandit_experiment(cfg);
    REQUIRE(a.files.size() == b.files.size());
    for (std::size_t i = 0; i < a.files.size(); ++i) {
        CHECK(a.files[i].first == b.files[i].first);
        CHECK(a.files[i].second == b.files[i].second);
    }

    BanditConfig wide = cfg;
    wide.workers = 2;
    const ExperimentArtifacts c = run_bandit_experiment(wide);
    REQUIRE(a.files.size() == c.files.size());
    for (std::size_t i = 0; i < a.files.size(); ++i) {
        CHECK(a.files[i].second == c.files[i].second);  // worker count invisible
    }

    BanditConfig other = cfg;
    other.seed = 8;
    const ExperimentArtifacts d = run_bandit_experiment(other);
    CHECK(a.files[0].second != d.files[0].second);  // seed actually matters
}

TEST_CASE("aggregate rows reduce the per-run logs exactly") {
    BanditConfig cfg = parse_bandit_config(small_bandit_config());
    cfg.keep_run_logs = true;
    const ExperimentArtifacts artifacts = run_bandit_experiment(cfg);
    REQUIRE(artifacts.run_logs.size() == 4);
    const auto rows = row_lookup(artifacts.rows);
    int checked = 0;
    for (const RunSeries& probe : artifacts.run_logs[0]) {
        for (std::size_t ti = 0; ti < artifacts.sample_times.size(); ++ti) {
            std::vector<double> values;
            for (const auto& run : artifacts.run_logs) {
                for (const RunSeries& series : run) {
                    if (series.agent == probe.agent && series.metric == probe.metric) {
                        values.push_back(series.values[ti]);
                    }
                }
            }
            const MeanStderr ms = reduce_mean_stderr(values);
            const auto it =
                rows.find({probe.agent, probe.metric, artifacts.sample_times[ti]});
            REQUIRE(it != rows.end());
            CHECK(std::abs(it->second.mean - ms.mean) <= 1e-9);
            CHECK(std::abs(it->second.stderr_mean - ms.stderr_mean) <= 1e-9);
            ++checked;
        }
    }
    CHECK(checked == 4 * 2 * 2);  // sample times x agents x metrics
}

TEST_CASE("mean and standard error reduction in closed form") {
    const MeanStderr ms = reduce_mean_stderr({1.0, 2.0, 3.0, 4.0});
    CHECK(ms.mean == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(ms.stderr_mean ==
          doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-12));
    const MeanStderr single = reduce_mean_stderr({7.0});
    CHECK(single.mean == 7.0);
    CHECK(single.stderr_mean == 0.0);
}

TEST_CASE("the gittins roster needs a horizon past the last step") {
    BanditConfig cfg = parse_bandit_config(
        json{{"levers", 2}, {"steps", 20}, {"runs", 2}, {"agents", {"gittins"}},
             {"gittins_horizon", 21}});
    CHECK_THROWS_AS(
        parse_bandit_config(json{{"steps", 20}, {"gittins_horizon", 20}}),
        ConfigError);
    BanditConfig short_horizon = cfg;
    short_horizon.gittins_horizon = 20;
    CHECK_THROWS_AS(run_bandit_experiment(short_horizon), ConfigError);
    const ExperimentArtifacts artifacts = run_bandit_experiment(cfg);
    bool saw_gittins = false;
    for (const MetricRow& row : artifacts.rows) {
        saw_gittins = saw_gittins || row.agent == "gittins";
    }
    CHECK(saw_gittins);
}

TEST_CASE("metric csv renders and parses losslessly") {
    std::vector<MetricRow> rows;
    rows.push_back(MetricRow{1, "avg_reward", 1.0 / 3.0, 1e-17, "bcr"});
    rows.push_back(MetricRow{1000000000000LL, "best_lever", -0.0625, 0.25, "egreedy"});
    rows.push_back(MetricRow{42, "tv", 5e-324, 1.7976931348623157e308, "probe"});
    const std::string text = format_csv(rows);
    CHECK(text.substr(0, text.find('\n')) == kMetricsCsvHeader);
    const std::vector<MetricRow> parsed = parse_csv(text);
    CHECK(parsed == rows);

    CHECK(format_csv({}) == std::string(kMetricsCsvHeader) + "\n");
    CHECK(parse_csv(format_csv({})).empty());

    CHECK_THROWS_AS(parse_csv(""), InvalidArgument);
    CHECK_THROWS_AS(parse_csv("nonsense\n"), InvalidArgument);
    CHECK_THROWS_AS(parse_csv(std::string(kMetricsCsvHeader) + "\n1,x,2\n"),
                    InvalidArgument);
    CHECK_THROWS_AS(parse_csv(std::string(kMetricsCsvHeader) + "\n1,x,a,b,c\n"),
                    InvalidArgument);

    const fs::path dir = fresh_temp_dir("bcr_test_csv");
    emit_csv((dir / "m.csv").string(), rows);
    CHECK(parse_csv(read_text_file((dir / "m.csv").string())) == rows);
    fs::remove_all(dir);
}

TEST_CASE("svg plots are well-formed xml") {
    PlotSeries s1{"bcr", {1, 2, 3, 4}, {0.1, 0.4, 0.2, 0.9}};
    PlotSeries s2{"egreedy", {1, 2, 3, 4},
                  {0.0, std::nan(""), 0.5, 0.25}};  // hole must be skipped
    PlotOptions opt;
    opt.title = "reward <&> progress";  // must be escaped, not break the xml
    opt.x_label = "step";
    opt.y_label = "reward";
    const std::string doc = render_svg_plot({s1, s2}, opt);
    CHECK(svg_well_formed(doc));
    CHECK(doc.find("nan") == std::string::npos);
    CHECK(doc.find("<svg") != std::string::npos);
    CHECK(doc.find("reward") != std::string::npos);

    CHECK(svg_well_formed(render_svg_plot({}, PlotOptions{})));

    // The checker itself has teeth.
    CHECK(!svg_well_formed("<svg><g></svg></g>"));
    CHECK(!svg_well_formed("<svg><g>"));
    CHECK(!svg_well_formed("plain text"));
}

TEST_CASE("experiment artifacts land on disk as emitted") {
    BanditConfig cfg = parse_bandit_config(small_bandit_config());
    const ExperimentArtifacts artifacts = run_bandit_experiment(cfg);
    REQUIRE(artifacts.files.size() >= 3);  // metrics, plots, summary
    const fs::path dir = fresh_temp_dir("bcr_test_artifacts");
    const fs::path nested = dir / "a" / "b";
    write_artifacts(nested.string(), artifacts);
    for (const auto& [name, content] : artifacts.files) {
        CHECK(read_text_file((nested / name).string()) == content);
    }
    // metrics.csv parses back to the aggregated rows.
    bool saw_metrics = false;
    for (const auto& [name, content] : artifacts.files) {
        if (name == "metrics.csv") {
            saw_metrics = true;
            CHECK(parse_csv(content) == artifacts.rows);
        } else if (name.size() > 4 && name.substr(name.size() - 4) == ".svg") {
            CHECK(svg_well_formed(content));
        } else if (name == "summary.json") {
            CHECK(json::parse(content)["experiment"] == "bandit");
        }
    }
    CHECK(saw_metrics);
    fs::remove_all(dir);
}

TEST_CASE("experiment dispatch accepts known kinds only") {
    const ExperimentArtifacts artifacts = run_experiment(
        "bandit", json{{"levers", 2}, {"steps", 5}, {"runs", 2}, {"agents", {"bcr"}}});
    CHECK(artifacts.summary["experiment"] == "bandit");
    CHECK_THROWS_AS(run_experiment("roulette", json::object()), ConfigError);
}

TEST_CASE("short-chain searches are found quickly at the smallest size") {
    ExpGapConfig cfg = parse_exp_gap_config(
        json{{"k_list", {2}}, {"runs", 31}, {"seed", 5}});
    const ExperimentArtifacts artifacts = run_exponential_gap_experiment(cfg);
    const std::vector<double> med_bcr =
        artifacts.summary["median_steps_bcr"].get<std::vector<double>>();
    const std::vector<double> med_probe =
        artifacts.summary["median_steps_probe"].get<std::vector<double>>();
    REQUIRE(med_bcr.size() == 1);
    CHECK(med_bcr[0] <= 16.0);
    CHECK(med_probe[0] <= 4.0);  // deterministic probe needs at most 2k steps
    bool saw_median_rows = false;
    for (const MetricRow& row : artifacts.rows) {
        if (row.metric == "median_steps" && row.agent == "probe") {
            saw_median_rows = true;
            CHECK(row.mean <= 4.0);
        }
    }
    CHECK(saw_median_rows);
}

TEST_CASE("the convergence experiment reports its diagnostics") {
    ConvergeConfig cfg = parse_converge_config(
        json{{"steps", 120}, {"runs", 3}, {"record_every", 10}, {"tv_checkpoint", 60},
             {"floor_after", 10}, {"monte_carlo", 5}, {"diagnostic_runs", 2},
             {"seed", 11}});
    const ExperimentArtifacts artifacts = run_convergence_experiment(cfg);
    const json& s = artifacts.summary;
    CHECK(s["experiment"] == "converge");
    const double frac = s["fraction_converged"].get<double>();
    CHECK(frac >= 0.0);
    CHECK(frac <= 1.0);
    // The decomposition identity and the posterior bound hold on every
    // recorded diagnostic run.
    CHECK(s["subdivergence_identity_max_error"].get<double>() <= 1e-10);
    CHECK(s["posterior_bound_max_violation"].get<double>() <= 1e-9);
    CHECK(s["boundedness"].is_array());
    CHECK(!s["boundedness"].empty());
    bool saw_divergence = false;
    for (const auto& [name, content] : artifacts.files) {
        if (name == "divergence.csv") {
            saw_divergence = true;
            CHECK(content.rfind("t,d,", 0) == 0);
        }
    }
    CHECK(saw_divergence);
}

TEST_CASE("grid-world runs end to end at desk scale") {
    GridworldConfig cfg = parse_gridworld_config(
        json{{"map_text", default_membrane_map_text()},
             {"steps", 2000},
             {"runs", 2},
             {"record_every", 500},
             {"summary_window", 500},
             {"agents", {"bcr", "r30"}},
             {"seed", 3}});
    const ExperimentArtifacts artifacts = run_gridworld_experiment(cfg);
    CHECK(artifacts.summary["experiment"] == "gridworld");
    CHECK(artifacts.summary["width"] == 7);
    const double bcr_window =
        artifacts.summary["agents"]["bcr"]["window_reward_mean"].get<double>();
    CHECK(bcr_window >= 0.0);
    CHECK(bcr_window <= 2.5);
    bool saw_occupancy = false;
    for (const auto& [name, content] : artifacts.files) {
        if (name == "occupancy.csv") {
            saw_occupancy = true;
            CHECK(content.rfind("agent,window,cell", 0) == 0);
        }
    }
    CHECK(saw_occupancy);

    // Determinism across worker counts holds here too.
    GridworldConfig wide = cfg;
    wide.workers = 2;
    const ExperimentArtifacts again = run_gridworld_experiment(wide);
    REQUIRE(again.files.size() == artifacts.files.size());
    for (std::size_t i = 0; i < artifacts.files.size(); ++i) {
        CHECK(artifacts.files[i].second == again.files[i].second);
    }
}

TEST_CASE("grid-world configs fail cleanly on bad maps") {
    GridworldConfig cfg;
    cfg.map_text.clear();
    cfg.map_path.clear();
    cfg.steps = 10;
    cfg.runs = 1;
    CHECK_THROWS_AS(run_gridworld_experiment(cfg), ConfigError);

    cfg.map_text = "...\n..x\n";  // no goal, bad glyph
    CHECK_THROWS_AS(run_gridworld_experiment(cfg), MapParseError);

    cfg.map_text.clear();
    cfg.map_path = "/nonexistent/bcr_map.map";
    CHECK_THROWS_AS(run_gridworld_experiment(cfg), IoError);
}
