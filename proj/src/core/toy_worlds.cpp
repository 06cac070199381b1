#include "core/toy_worlds.hpp"

#include <cmath>

namespace bcr {

namespace {

void check_bias(double bias) {
    if (!(bias >= 0.0 && bias <= 1.0)) {
        throw InvalidArgument("coin bias must lie in [0,1]");
    }
}

// Number of trailing actions equal to `target` in the completed history plus
// the action about to be executed, with the count restarting after each
// payout (observation 1). Pure function of the record, so both the
// environment and the mode hypotheses can share it.
int run_length_with(const InteractionHistory& history, int action, int target) {
    if (action != target) return 0;
    int run = 1;
    for (std::size_t i = history.size(); i-- > 0;) {
        const Step& s = history[i];
        if (s.observation == 1 || s.action != target) break;
        ++run;
    }
    return run;
}

}  // namespace

Environment make_coin_environment(double bias) {
    check_bias(bias);
    Environment env;
    env.actions = Alphabet{2};
    env.observations = Alphabet{2};
    env.respond = [bias](const InteractionHistory&, int, Rng& rng) {
        std::bernoulli_distribution flip(bias);
        const int o = flip(rng) ? 1 : 0;
        return Step{0, o, static_cast<double>(o)};
    };
    return env;
}

OperationMode make_coin_mode(double bias, int bet) {
    check_bias(bias);
    if (bet == -1) bet = bias >= 0.5 ? 1 : 0;
    if (bet != 0 && bet != 1) {
        throw InvalidArgument("coin mode bet must be 0 or 1");
    }
    OperationMode mode;
    mode.label = "coin(" + std::to_string(bias) + ")";
    mode.policy = [bet](const InteractionHistory&) {
        std::vector<double> p(2, 0.0);
        p[static_cast<std::size_t>(bet)] = 1.0;
        return p;
    };
    mode.hypothesis = [bias](const InteractionHistory&, int) {
        return std::vector<double>{1.0 - bias, bias};
    };
    return mode;
}

ModeSet make_coin_mode_set(const std::vector<double>& biases) {
    ModeSet ms;
    ms.actions = Alphabet{2};
    ms.observations = Alphabet{2};
    for (double b : biases) ms.modes.push_back(make_coin_mode(b));
    ms.prior.assign(biases.size(), 1.0 / static_cast<double>(biases.size()));
    validate_mode_set(ms);
    return ms;
}

ModeSet make_identical_hypothesis_mode_set(double bias, int n_modes) {
    if (n_modes < 2) throw InvalidArgument("need at least two modes");
    ModeSet ms;
    ms.actions = Alphabet{2};
    ms.observations = Alphabet{2};
    for (int m = 0; m < n_modes; ++m) {
        // First mode acts uniformly, the rest bet on a fixed face; all share
        // the same observation law.
        OperationMode mode = make_coin_mode(bias, m == 0 ? 0 : (m % 2));
        if (m == 0) {
            mode.policy = [](const InteractionHistory&) {
                return std::vector<double>{0.5, 0.5};
            };
        }
        mode.label = "same-hypothesis-" + std::to_string(m);
        ms.modes.push_back(std::move(mode));
    }
    ms.prior.assign(static_cast<std::size_t>(n_modes), 1.0 / n_modes);
    validate_mode_set(ms);
    return ms;
}

Environment make_consecutive_run_environment(int k, int target_action) {
    if (k < 1) throw InvalidArgument("run length k must be positive");
    if (target_action != 0 && target_action != 1) {
        throw InvalidArgument("target action must be 0 or 1");
    }
    Environment env;
    env.actions = Alphabet{2};
    env.observations = Alphabet{2};
    env.respond = [k, target_action](const InteractionHistory& history, int action, Rng&) {
        const int o = run_length_with(history, action, target_action) >= k ? 1 : 0;
        return Step{0, o, static_cast<double>(o)};
    };
    return env;
}

OperationMode make_consecutive_run_mode(int k, int target_action) {
    if (k < 1) throw InvalidArgument("run length k must be positive");
    OperationMode mode;
    mode.label = "run-of-" + std::to_string(k) + "-on-" + std::to_string(target_action);
    mode.policy = [target_action](const InteractionHistory&) {
        std::vector<double> p(2, 0.0);
        p[static_cast<std::size_t>(target_action)] = 1.0;
        return p;
    };
    mode.hypothesis = [k, target_action](const InteractionHistory& history, int action) {
        const int o = run_length_with(history, action, target_action) >= k ? 1 : 0;
        std::vector<double> p(2, 0.0);
        p[static_cast<std::size_t>(o)] = 1.0;
        return p;
    };
    return mode;
}

ModeSet make_consecutive_run_mode_set(int k) {
    ModeSet ms;
    ms.actions = Alphabet{2};
    ms.observations = Alphabet{2};
    ms.modes.push_back(make_consecutive_run_mode(k, 0));
    ms.modes.push_back(make_consecutive_run_mode(k, 1));
    ms.prior = {0.5, 0.5};
    validate_mode_set(ms);
    return ms;
}

}  // namespace bcr
