#include <doctest.h>

#include <cmath>
#include <random>

#include "core/engine.hpp"
#include "core/toy_worlds.hpp"

using namespace bcr;

namespace {

double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

// Random history-dependent mode: the observation bias depends on the parity
// of the previous observation and on the current action, so likelihoods are
// genuinely prefix-dependent (exercises the order-consistency property).
OperationMode make_parity_mode(double b00, double b01, double b10, double b11) {
    OperationMode mode;
    mode.label = "parity";
    mode.policy = [](const InteractionHistory&) {
        return std::vector<double>{0.5, 0.5};
    };
    mode.hypothesis = [=](const InteractionHistory& h, int action) {
        const int parity = h.size() == 0 ? 0 : h.back().observation;
        const double b = parity == 0 ? (action == 0 ? b00 : b01)
                                     : (action == 0 ? b10 : b11);
        return std::vector<double>{1.0 - b, b};
    };
    return mode;
}

}  // namespace

TEST_CASE("posterior normalisation keeps logsumexp at zero") {
    ModePosterior p(std::vector<double>{-3.0, -1.0, -2.0});
    CHECK(log_sum_exp(p.log_weights()) == doctest::Approx(0.0).epsilon(1e-12));
    double total = 0.0;
    for (double v : p.probabilities()) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bcr_observe: single mode stays a point mass") {
    ModeSet ms = make_coin_mode_set({0.4});
    ModePosterior post = ModePosterior::from_prior(ms.prior);
    InteractionHistory h;
    post = bcr_observe(post, ms, h, 0, 1);
    CHECK(post.probability(0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bcr_observe: identical hypotheses leave the posterior untouched") {
    ModeSet ms = make_identical_hypothesis_mode_set(0.7, 3);
    ModePosterior post = ModePosterior::from_prior(ms.prior);
    InteractionHistory h;
    for (int t = 0; t < 32; ++t) {
        const int o = (t * 7) % 2;
        post = bcr_observe(post, ms, h, t % 2, o);
        h.push(Step{t % 2, o, 0.0});
    }
    for (int m = 0; m < ms.size(); ++m) {
        CHECK(std::abs(post.log_weight(m) - std::log(1.0 / 3.0)) < 1e-12);
    }
}

TEST_CASE("bcr_observe: two coins 0.9/0.1, observing heads gives (0.9, 0.1)") {
    ModeSet ms = make_coin_mode_set({0.9, 0.1});
    ModePosterior post = ModePosterior::from_prior(ms.prior);
    InteractionHistory h;
    post = bcr_observe(post, ms, h, 0, 1);
    CHECK(post.probability(0) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(post.probability(1) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("bcr_observe: all-zero likelihood is a hard error") {
    // Both modes are deterministic automata predicting observation 0 here.
    ModeSet ms = make_consecutive_run_mode_set(3);
    ModePosterior post = ModePosterior::from_prior(ms.prior);
    InteractionHistory h;
    CHECK_THROWS_AS(bcr_observe(post, ms, h, 0, 1), ModelClassExhausted);
}

TEST_CASE("bcr_act: a single deterministic mode always emits its action") {
    ModeSet ms = make_coin_mode_set({0.8});  // bets on 1
    ModePosterior post = ModePosterior::from_prior(ms.prior);
    InteractionHistory h;
    Rng rng = make_rng(5);
    for (int i = 0; i < 16; ++i) {
        CHECK(bcr_act(post, ms, h, rng).action == 1);
    }
}

TEST_CASE("bcr_act: two point-mass modes under equal posterior split 50/50") {
    ModeSet ms = make_coin_mode_set({0.2, 0.8});  // bets 0 and 1
    ModePosterior post = ModePosterior::uniform(2);
    InteractionHistory h;
    Rng rng = make_rng(17);
    const int n = 100000;
    int ones = 0;
    for (int i = 0; i < n; ++i) ones += bcr_act(post, ms, h, rng).action;
    CHECK(std::abs(ones / static_cast<double>(n) - 0.5) < 0.01);
}

TEST_CASE("bcr_act matches the predictive action distribution (3 modes, 1e6 draws)") {
    ModeSet ms = make_coin_mode_set({0.1, 0.6, 0.9});
    ModePosterior post(std::vector<double>{std::log(0.5), std::log(0.2), std::log(0.3)});
    InteractionHistory h;
    const std::vector<double> exact = predictive_action_distribution(post, ms, h);
    Rng rng = make_rng(23);
    const int n = 1000000;
    std::vector<double> freq(2, 0.0);
    for (int i = 0; i < n; ++i) {
        freq[static_cast<std::size_t>(bcr_act(post, ms, h, rng).action)] += 1.0;
    }
    for (double& f : freq) f /= n;
    CHECK(tv_distance(freq, exact) <= 0.01);
}

TEST_CASE("naive_update on identical modes changes nothing") {
    ModeSet ms = make_coin_mode_set({0.6, 0.6});
    ModePosterior post = ModePosterior::uniform(2);
    InteractionHistory h;
    post = naive_update(post, ms, h, ActionEvent{1});
    post = naive_update(post, ms, h, ObservationEvent{1, 1});
    CHECK(post.probability(0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("naive_update applies the action factor: (1, 1/2) -> (2/3, 1/3)") {
    ModeSet ms = make_identical_hypothesis_mode_set(0.5, 2);
    // Mode 0 is uniform over actions, mode 1 bets on action 1.
    ModePosterior post = ModePosterior::uniform(2);
    InteractionHistory h;
    const ModePosterior after = naive_update(post, ms, h, ActionEvent{1});
    CHECK(after.probability(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(after.probability(1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    // The control rule's own update has no action factor at all: conditioning
    // on the same step's observation leaves identical-hypothesis modes alone.
    const ModePosterior rule = bcr_observe(post, ms, h, 1, 1);
    CHECK(rule.probability(0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("predictive_action_distribution: single mode returns its policy") {
    ModeSet ms = make_coin_mode_set({0.9});
    ModePosterior post = ModePosterior::from_prior(ms.prior);
    InteractionHistory h;
    const std::vector<double> mix = predictive_action_distribution(post, ms, h);
    CHECK(mix[0] == doctest::Approx(0.0));
    CHECK(mix[1] == doctest::Approx(1.0));
}

TEST_CASE("predictive_action_distribution: equal point masses mix to one half") {
    ModeSet ms = make_coin_mode_set({0.2, 0.8});
    ModePosterior post = ModePosterior::uniform(2);
    InteractionHistory h;
    const std::vector<double> mix = predictive_action_distribution(post, ms, h);
    CHECK(mix[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(mix[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("intervention invariance: identical hypotheses pin posterior to prior") {
    ModeSet ms = make_identical_hypothesis_mode_set(0.6, 4);
    Environment env = make_coin_environment(0.6);
    BcrAgent agent(ms);
    run_interaction(agent, env, 2000, 404);
    for (int m = 0; m < ms.size(); ++m) {
        CHECK(std::abs(agent.posterior().log_weight(m) - std::log(0.25)) <= 1e-10);
    }
}

TEST_CASE("the naive mixture drifts under its own actions") {
    ModeSet ms = make_identical_hypothesis_mode_set(0.6, 2);
    Environment env = make_coin_environment(0.6);
    NaiveMixtureAgent agent(ms);
    run_interaction(agent, env, 2000, 405);
    const std::vector<double> w = agent.weights().probabilities();
    CHECK(tv_distance(w, {0.5, 0.5}) >= 0.1);
}

TEST_CASE("order consistency: folded updates equal the closed-form weights") {
    std::mt19937_64 meta(2024);
    std::uniform_real_distribution<double> unit(0.05, 0.95);
    std::uniform_int_distribution<int> mode_count(2, 5);
    std::uniform_int_distribution<int> len(1, 40);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        const int n_modes = mode_count(meta);
        ModeSet ms;
        ms.actions = Alphabet{2};
        ms.observations = Alphabet{2};
        std::vector<double> prior(static_cast<std::size_t>(n_modes));
        double z = 0.0;
        for (int m = 0; m < n_modes; ++m) {
            ms.modes.push_back(make_parity_mode(unit(meta), unit(meta), unit(meta), unit(meta)));
            prior[static_cast<std::size_t>(m)] = unit(meta);
            z += prior[static_cast<std::size_t>(m)];
        }
        for (double& p : prior) p /= z;
        // Renormalise exactly enough for validation.
        double z2 = 0.0;
        for (double p : prior) z2 += p;
        prior.back() += 1.0 - z2;
        ms.prior = prior;
        validate_mode_set(ms);

        InteractionHistory h;
        ModePosterior folded = ModePosterior::from_prior(ms.prior);
        const int t_max = len(meta);
        for (int t = 0; t < t_max; ++t) {
            const int a = coin(meta);
            const int o = coin(meta);
            folded = bcr_observe(folded, ms, h, a, o);
            h.push(Step{a, o, 0.0});
        }

        // Closed form: log prior + cumulative observation log-likelihood,
        // normalised once at the end.
        std::vector<double> lw(static_cast<std::size_t>(n_modes));
        for (int m = 0; m < n_modes; ++m) {
            lw[static_cast<std::size_t>(m)] =
                std::log(ms.prior[static_cast<std::size_t>(m)]) +
                observation_log_likelihood(ms.modes[static_cast<std::size_t>(m)], h);
        }
        const double norm = log_sum_exp(lw);
        for (int m = 0; m < n_modes; ++m) {
            CHECK(std::abs(folded.log_weight(m) - (lw[static_cast<std::size_t>(m)] - norm)) <=
                  1e-10);
        }
    }
}

TEST_CASE("tiny likelihoods stay finite in log space") {
    // Hypotheses produce likelihoods around 1e-300; the posterior must stay
    // NaN-free and normalised.
    ModeSet ms;
    ms.actions = Alphabet{2};
    ms.observations = Alphabet{2};
    auto make_tiny = [](double p1) {
        OperationMode mode;
        mode.label = "tiny";
        mode.policy = [](const InteractionHistory&) {
            return std::vector<double>{1.0, 0.0};
        };
        mode.hypothesis = [p1](const InteractionHistory&, int) {
            return std::vector<double>{1.0 - p1, p1};
        };
        return mode;
    };
    ms.modes.push_back(make_tiny(1e-300));
    ms.modes.push_back(make_tiny(2e-300));
    ms.prior = {0.5, 0.5};
    ModePosterior post = ModePosterior::uniform(2);
    InteractionHistory h;
    post = bcr_observe(post, ms, h, 0, 1);
    for (int m = 0; m < 2; ++m) {
        CHECK(!std::isnan(post.log_weight(m)));
    }
    CHECK(post.probability(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(post.probability(1) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("BcrAgent with mode hold resamples only at the hold boundary") {
    ModeSet ms = make_coin_mode_set({0.2, 0.8});
    BcrAgent agent(ms, 4);
    Environment env = make_coin_environment(0.5);
    run_interaction(agent, env, 32, 606);
    const std::vector<int>& modes = agent.acting_modes();
    REQUIRE(modes.size() == 32);
    for (std::size_t t = 0; t < modes.size(); ++t) {
        if (t % 4 != 0) CHECK(modes[t] == modes[t - 1]);
    }
}

TEST_CASE("record_bcr_run captures posteriors for every step") {
    ModeSet ms = make_coin_mode_set({0.3, 0.7});
    Environment env = make_coin_environment(0.7);
    const RecordedRun run = record_bcr_run(ms, env, 50, 31);
    CHECK(run.history.size() == 50);
    CHECK(run.acting_modes.size() == 50);
    REQUIRE(run.posteriors.size() == 51);
    CHECK(run.posteriors.front().probability(0) == doctest::Approx(0.5));
}
