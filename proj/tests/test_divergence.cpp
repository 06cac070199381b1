#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/divergence.hpp"
#include "core/rng.hpp"
#include "core/toy_worlds.hpp"

using namespace bcr;

namespace {

constexpr double kLn9 = 2.1972245773362196;  // ln(0.9 / 0.1)

InteractionHistory history_of_observations(const std::vector<int>& observations) {
    InteractionHistory h;
    for (int o : observations) {
        h.push(Step{0, o, static_cast<double>(o)});
    }
    return h;
}

RecordedRun coin_run(const ModeSet& ms, double env_bias, int steps,
                     std::uint64_t seed) {
    return record_bcr_run(ms, make_coin_environment(env_bias), steps, seed);
}

}  // namespace

TEST_CASE("increments are log ratios of the two observation laws") {
    const ModeSet ms = make_coin_mode_set({0.9, 0.1});

    DivergenceTrace up =
        build_divergence_trace(history_of_observations({1}), ms, 0, 1, {0});
    REQUIRE(up.increments.size() == 1);
    CHECK(up.increments[0] == doctest::Approx(kLn9).epsilon(1e-12));
    CHECK(up.total() == doctest::Approx(kLn9).epsilon(1e-12));

    DivergenceTrace down =
        build_divergence_trace(history_of_observations({0}), ms, 0, 1, {0});
    CHECK(down.increments[0] == doctest::Approx(-kLn9).epsilon(1e-12));
}

TEST_CASE("matching observations accumulate and a contradiction cancels") {
    const ModeSet ms = make_coin_mode_set({0.9, 0.1});

    DivergenceTrace two =
        build_divergence_trace(history_of_observations({1, 1}), ms, 0, 1, {0, 0});
    CHECK(two.total() == doctest::Approx(2.0 * kLn9).epsilon(1e-12));
    const std::vector<double> sums = two.partial_sums();
    REQUIRE(sums.size() == 2);
    CHECK(sums[0] == doctest::Approx(kLn9).epsilon(1e-12));
    CHECK(sums[1] == doctest::Approx(2.0 * kLn9).epsilon(1e-12));

    DivergenceTrace cancel =
        build_divergence_trace(history_of_observations({1, 0}), ms, 0, 1, {0, 0});
    CHECK(cancel.total() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("divergence of a mode against itself vanishes") {
    const ModeSet ms = make_coin_mode_set({0.9, 0.1});
    DivergenceTrace self = build_divergence_trace(
        history_of_observations({1, 0, 1, 1}), ms, 1, 1, {0, 1, 0, 1});
    for (double inc : self.increments) {
        CHECK(inc == 0.0);
    }
    CHECK(self.total() == 0.0);
    CHECK_FALSE(self.has_infinite);
}

TEST_CASE("hand-worked four-step decomposition by acting mode") {
    const ModeSet ms = make_coin_mode_set({0.9, 0.1});
    // Observations 1,1,0,1 under acting modes 0,1,1,0: increments
    // ln9, ln9, -ln9, ln9. Mode 0 acted at steps {0,3}, mode 1 at {1,2}.
    const DivergenceTrace trace = build_divergence_trace(
        history_of_observations({1, 1, 0, 1}), ms, 0, 1, {0, 1, 1, 0});
    CHECK(trace.total() == doctest::Approx(2.0 * kLn9).epsilon(1e-12));

    const std::vector<double> g = decompose_subdivergences(trace, ms.size());
    REQUIRE(g.size() == 2);
    CHECK(g[0] == doctest::Approx(2.0 * kLn9).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(g[0] + g[1] == doctest::Approx(trace.total()).epsilon(1e-12));
}

TEST_CASE("decomposition reconstructs the total on recorded runs") {
    Rng rng = make_rng(20240817);
    std::uniform_real_distribution<double> bias(0.05, 0.95);
    for (int rep = 0; rep < 25; ++rep) {
        const ModeSet ms = make_coin_mode_set({bias(rng), bias(rng), bias(rng)});
        const RecordedRun run = coin_run(ms, bias(rng), 200, 1000 + rep);
        for (int m_star = 0; m_star < ms.size(); ++m_star) {
            for (int m = 0; m < ms.size(); ++m) {
                const DivergenceTrace trace = build_divergence_trace(
                    run.history, ms, m_star, m, run.acting_modes);
                const std::vector<double> g =
                    decompose_subdivergences(trace, ms.size());
                double sum = 0.0;
                for (double v : g) sum += v;
                CHECK(std::abs(sum - trace.total()) <= 1e-10);
            }
        }
    }
}

TEST_CASE("an impossible observation rules the competitor out") {
    const ModeSet ms = make_coin_mode_set({0.9, 1.0});
    // Mode 1 puts zero mass on observation 0.
    const DivergenceTrace trace =
        build_divergence_trace(history_of_observations({1, 0}), ms, 0, 1, {0, 0});
    CHECK(trace.has_infinite);
    CHECK(std::isinf(trace.total()));
    CHECK(trace.increments[1] == std::numeric_limits<double>::infinity());
}

TEST_CASE("posterior floor monitor compares against lambda over mode count") {
    std::vector<ModePosterior> series;
    series.push_back(ModePosterior(std::vector<double>{std::log(0.3), std::log(0.7)}));
    series.push_back(ModePosterior(std::vector<double>{std::log(0.6), std::log(0.4)}));

    const PosteriorFloorReport ok = posterior_floor_monitor(series, 0, 0.4);
    CHECK(ok.min_posterior == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(ok.floor == doctest::Approx(0.2).epsilon(1e-12));
    CHECK_FALSE(ok.violated);

    const PosteriorFloorReport bad = posterior_floor_monitor(series, 0, 0.8);
    CHECK(bad.floor == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(bad.violated);
}

TEST_CASE("identical hypotheses freeze the predictive action law") {
    const ModeSet ms = make_identical_hypothesis_mode_set(0.8, 2);
    const RecordedRun run = coin_run(ms, 0.8, 50, 7);
    const std::vector<double> tv = convergence_monitor(run, ms, 0);
    REQUIRE(tv.size() == run.history.size());
    // The posterior never moves off uniform: the mixture of the uniform
    // policy (mode 0) and the point mass on face 1 (mode 1) is {1/4, 3/4},
    // at distance 1/4 from mode 0's uniform policy, at every step.
    for (double v : tv) {
        CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
    }
}

TEST_CASE("policy distance tracks the reference mode's posterior mass") {
    const ModeSet ms = make_coin_mode_set({0.9, 0.1});
    const RecordedRun run = coin_run(ms, 0.9, 300, 11);
    const std::vector<double> tv = convergence_monitor(run, ms, 0);
    REQUIRE(tv.size() == 300);
    // The two coin modes bet on opposite faces (point-mass policies), so the
    // distance from the mixture to mode 0's policy is its competitor's mass.
    for (std::size_t t = 0; t < tv.size(); ++t) {
        const double expected = 1.0 - run.posteriors[t].probability(0);
        CHECK(tv[t] == doctest::Approx(expected).epsilon(1e-9));
    }
    CHECK(tv.back() < 0.05);
}

TEST_CASE("resampled sub-divergence estimates bracket the realised values") {
    const ModeSet ms = make_coin_mode_set({0.8, 0.2});
    std::vector<RecordedRun> runs;
    for (int r = 0; r < 5; ++r) {
        runs.push_back(coin_run(ms, 0.8, 200, 100 + r));
    }
    const int n_mc = 80;
    const BoundednessReport report = empirical_boundedness(runs, ms, 0, 1, n_mc, 42);
    REQUIRE(report.entries.size() == 2);
    long total_steps = 0;
    for (const BoundednessEntry& e : report.entries) {
        if (e.insufficient) continue;
        total_steps += e.sample_count;
        CHECK(e.estimate_stderr >= 0.0);
        // The realised sum is one draw of the resampled quantity, so compare
        // against the per-draw spread (stderr times sqrt of the Monte-Carlo
        // count), not the much tighter error of the mean itself.
        const double draw_sd = e.estimate_stderr * std::sqrt(double(n_mc));
        CHECK(std::abs(e.realized - e.estimate_mean) <= 5.0 * draw_sd + 1e-9);
    }
    CHECK(total_steps == 5 * 200);
}

TEST_CASE("modes that never act are reported as insufficient") {
    const ModeSet ms = make_coin_mode_set({0.8, 0.2});
    RecordedRun run;
    run.history = history_of_observations({1, 0, 1});
    run.acting_modes = {0, 0, 0};
    for (int t = 0; t <= 3; ++t) {
        run.posteriors.push_back(ModePosterior::uniform(2));
    }
    const BoundednessReport report = empirical_boundedness({run}, ms, 0, 1, 20, 5);
    REQUIRE(report.entries.size() == 2);
    CHECK_FALSE(report.entries[0].insufficient);
    CHECK(report.entries[0].sample_count == 3);
    CHECK(report.entries[1].insufficient);
    CHECK(report.entries[1].sample_count == 0);
}

TEST_CASE("divergence table renders one labelled row per step") {
    const ModeSet ms = make_coin_mode_set({0.9, 0.1});
    const RecordedRun run = coin_run(ms, 0.9, 12, 3);
    const std::string csv = format_divergence_csv(run, ms, 0, 1);

    std::istringstream in(csv);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "t,d,g_mode0,g_mode1,posterior_mstar,tv");
    int rows = 0;
    double last_d = 0.0;
    while (std::getline(in, line)) {
        ++rows;
        int t = 0;
        double d = 0.0, g0 = 0.0, g1 = 0.0, post = 0.0, tv = 0.0;
        REQUIRE(std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%lf", &t, &d, &g0,
                            &g1, &post, &tv) == 6);
        CHECK(t == rows);
        CHECK(g0 + g1 == doctest::Approx(d).epsilon(1e-9));
        CHECK(post >= 0.0);
        CHECK(post <= 1.0);
        last_d = d;
    }
    CHECK(rows == 12);
    const DivergenceTrace trace =
        build_divergence_trace(run.history, ms, 0, 1, run.acting_modes);
    CHECK(last_d == doctest::Approx(trace.total()).epsilon(1e-12));

    const std::filesystem::path path =
        std::filesystem::temp_directory_path() / "bcr_divergence_test.csv";
    write_divergence_csv(path.string(), run, ms, 0, 1);
    std::ifstream file(path);
    std::stringstream buffer;
    buffer << file.rdbuf();
    CHECK(buffer.str() == csv);
    std::filesystem::remove(path);
}
