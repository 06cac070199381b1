#include <doctest.h>

#include <cmath>

#include "core/interaction.hpp"
#include "core/toy_worlds.hpp"

using namespace bcr;

namespace {

// Environment that echoes a fixed observation sequence regardless of actions.
Environment make_scripted_environment(std::vector<int> script) {
    Environment env;
    env.actions = Alphabet{2};
    env.observations = Alphabet{2};
    env.respond = [script = std::move(script)](const InteractionHistory& h, int, Rng&) {
        const int o = script[h.size() % script.size()];
        return Step{0, o, static_cast<double>(o)};
    };
    return env;
}

PolicyFn point_mass_policy(int action, int n = 2) {
    return [action, n](const InteractionHistory&) {
        std::vector<double> p(static_cast<std::size_t>(n), 0.0);
        p[static_cast<std::size_t>(action)] = 1.0;
        return p;
    };
}

class CyclingAgent : public Agent {
public:
    int act(const InteractionHistory& h, Rng&) override {
        return static_cast<int>(h.size() % 2);
    }
    void update(const InteractionHistory&, const Step&) override {}
};

}  // namespace

TEST_CASE("history enforces strict alternation") {
    InteractionHistory h;
    CHECK(h.empty());
    h.push_action(1);
    CHECK(h.pending_action() == 1);
    CHECK_THROWS_AS(h.push_action(0), InvalidArgument);
    CHECK_THROWS_AS(h.push(Step{0, 0, 0.0}), InvalidArgument);
    h.push_observation(0, 0.25);
    CHECK(h.size() == 1);
    CHECK(h.back() == Step{1, 0, 0.25});
    CHECK_THROWS_AS(h.push_observation(1), InvalidArgument);
    h.push(Step{0, 1, 0.0});
    CHECK(h.size() == 2);
    CHECK(h.prefix(1).size() == 1);
    CHECK(h.prefix(1)[0] == Step{1, 0, 0.25});
    CHECK_THROWS_AS(h.prefix(3), InvalidArgument);
}

TEST_CASE("distribution validation rejects bad vectors") {
    CHECK_THROWS_AS(validate_distribution({}, "t"), InvalidArgument);
    CHECK_THROWS_AS(validate_distribution({0.5, -0.1, 0.6}, "t"), InvalidArgument);
    CHECK_THROWS_AS(validate_distribution({0.5, 0.4}, "t"), InvalidArgument);
    CHECK_THROWS_AS(validate_distribution({0.7, 0.7}, "t"), InvalidArgument);
    CHECK_NOTHROW(validate_distribution({0.3, 0.7}, "t"));
    CHECK_NOTHROW(validate_distribution(
        std::vector<double>(49, 1.0 / 49.0), "t"));
}

TEST_CASE("couple_step: degenerate policy and deterministic environment") {
    Environment env = make_scripted_environment({1});
    InteractionHistory h;
    Rng rng = make_rng(7);
    const Step s = couple_step(point_mass_policy(0), env, h, rng);
    CHECK(s.action == 0);
    CHECK(s.observation == 1);
}

TEST_CASE("couple_step: uniform policy emits each action half the time") {
    Environment env = make_scripted_environment({0});
    PolicyFn uniform = [](const InteractionHistory&) {
        return std::vector<double>{0.5, 0.5};
    };
    InteractionHistory h;
    Rng rng = make_rng(11);
    const int n = 100000;
    int ones = 0;
    for (int i = 0; i < n; ++i) {
        ones += couple_step(uniform, env, h, rng).action;
    }
    // Binomial(1e5, 0.5): sigma ~ 0.0016, so 0.01 is a >6-sigma band.
    CHECK(std::abs(ones / static_cast<double>(n) - 0.5) < 0.01);
}

TEST_CASE("couple_step validates the policy output") {
    Environment env = make_scripted_environment({0});
    PolicyFn bad = [](const InteractionHistory&) {
        return std::vector<double>{0.9, 0.2};
    };
    InteractionHistory h;
    Rng rng = make_rng(1);
    CHECK_THROWS_AS(couple_step(bad, env, h, rng), InvalidArgument);
}

TEST_CASE("run_interaction: zero horizon yields the empty history") {
    Environment env = make_scripted_environment({1});
    CyclingAgent agent;
    const InteractionHistory h = run_interaction(agent, env, 0, 3);
    CHECK(h.empty());
}

TEST_CASE("run_interaction: deterministic pair produces the predetermined record") {
    // Agent cycles 0,1,0; environment scripts observations 1,1,0.
    Environment env = make_scripted_environment({1, 1, 0});
    CyclingAgent agent;
    const InteractionHistory h = run_interaction(agent, env, 3, 99);
    REQUIRE(h.size() == 3);
    CHECK(h[0] == Step{0, 1, 1.0});
    CHECK(h[1] == Step{1, 1, 1.0});
    CHECK(h[2] == Step{0, 0, 0.0});
}

TEST_CASE("run_interaction: same seed reproduces the identical history") {
    Environment env = make_coin_environment(0.37);
    ModeSet ms = make_coin_mode_set({0.2, 0.8});
    BcrAgent a1(ms), a2(ms);
    const InteractionHistory h1 = run_interaction(a1, env, 512, 42);
    const InteractionHistory h2 = run_interaction(a2, env, 512, 42);
    CHECK(h1 == h2);
    BcrAgent a3(ms);
    const InteractionHistory h3 = run_interaction(a3, env, 512, 43);
    CHECK(h1 != h3);  // different seed should (generically) differ
}

TEST_CASE("interaction history alternates for arbitrary agent/environment pairs") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        Environment env = make_coin_environment(0.5);
        ModeSet ms = make_coin_mode_set({0.3, 0.6, 0.9});
        BcrAgent agent(ms);
        const InteractionHistory h = run_interaction(agent, env, 64, seed);
        CHECK(h.size() == 64);
        CHECK(!h.pending_action().has_value());
        for (std::size_t t = 0; t < h.size(); ++t) {
            CHECK(h[t].action >= 0);
            CHECK(h[t].action < 2);
            CHECK(h[t].observation >= 0);
            CHECK(h[t].observation < 2);
        }
    }
}

TEST_CASE("observation_log_likelihood: empty history scores zero") {
    const OperationMode mode = make_coin_mode(0.5);
    CHECK(observation_log_likelihood(mode, InteractionHistory{}) == 0.0);
}

TEST_CASE("observation_log_likelihood: uniform coin, four steps") {
    const OperationMode mode = make_coin_mode(0.5);
    InteractionHistory h;
    h.push(Step{0, 1, 1.0});
    h.push(Step{1, 0, 0.0});
    h.push(Step{0, 0, 0.0});
    h.push(Step{1, 1, 1.0});
    // 4 * ln(0.5), frozen independently.
    CHECK(observation_log_likelihood(mode, h) ==
          doctest::Approx(-2.772588722239781).epsilon(1e-12));
}

TEST_CASE("observation_log_likelihood: Bernoulli(0.3) on observations 1,0") {
    const OperationMode mode = make_coin_mode(0.3);
    InteractionHistory h;
    h.push(Step{0, 1, 1.0});
    h.push(Step{0, 0, 0.0});
    // ln 0.3 + ln 0.7, frozen independently.
    CHECK(observation_log_likelihood(mode, h) ==
          doctest::Approx(-1.5606477482646686).epsilon(1e-12));
}

TEST_CASE("symbols outside their alphabet are rejected") {
    CHECK_THROWS_AS(check_symbol(Alphabet{3}, 3, "t"), InvalidArgument);
    CHECK_THROWS_AS(check_symbol(Alphabet{3}, -1, "t"), InvalidArgument);
    CHECK_NOTHROW(check_symbol(Alphabet{3}, 2, "t"));
}
