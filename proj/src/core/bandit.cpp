#include "core/bandit.hpp"

#include <cmath>

namespace bcr {

namespace {
// Argmax with uniform tie-breaking over exactly-equal leaders.
int argmax_uniform(const std::vector<double>& v, Rng& rng) {
    double best = v[0];
    for (double x : v) best = std::max(best, x);
    int ties = 0;
    for (double x : v) {
        if (x == best) ++ties;
    }
    std::uniform_int_distribution<int> pick(0, ties - 1);
    int k = pick(rng);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] == best && k-- == 0) return static_cast<int>(i);
    }
    return static_cast<int>(v.size()) - 1;
}
}  // namespace

void validate_bandit_env(const BanditEnv& env) {
    if (env.biases.empty()) throw InvalidArgument("bandit needs at least one lever");
    for (double b : env.biases) {
        if (!(b >= 0.0 && b <= 1.0)) {
            throw InvalidArgument("bandit bias must lie in [0,1]");
        }
    }
}

int bandit_step(const BanditEnv& env, int lever, Rng& rng) {
    if (lever < 0 || lever >= env.levers()) {
        throw InvalidArgument("bandit lever index out of range");
    }
    std::bernoulli_distribution payout(env.biases[static_cast<std::size_t>(lever)]);
    return payout(rng) ? 1 : 0;
}

BanditStats::BanditStats(int levers) {
    if (levers < 1) throw InvalidArgument("bandit needs at least one lever");
    wins.assign(static_cast<std::size_t>(levers), 0);
    losses.assign(static_cast<std::size_t>(levers), 0);
}

BanditStats bandit_update(BanditStats stats, int lever, int reward) {
    if (lever < 0 || lever >= stats.levers()) {
        throw InvalidArgument("bandit lever index out of range");
    }
    if (reward != 0 && reward != 1) {
        throw InvalidArgument("bandit reward must be 0 or 1");
    }
    if (reward == 1) {
        ++stats.wins[static_cast<std::size_t>(lever)];
    } else {
        ++stats.losses[static_cast<std::size_t>(lever)];
    }
    return stats;
}

double sample_beta(double a, double b, Rng& rng) {
    if (!(a > 0.0 && b > 0.0)) throw InvalidArgument("beta parameters must be positive");
    std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    if (x + y == 0.0) return 0.5;  // only reachable through underflow
    return x / (x + y);
}

int thompson_act(const BanditStats& stats, Rng& rng, const BetaPrior& prior) {
    std::vector<double> draw(static_cast<std::size_t>(stats.levers()));
    for (int j = 0; j < stats.levers(); ++j) {
        draw[static_cast<std::size_t>(j)] =
            sample_beta(prior.a + static_cast<double>(stats.wins[static_cast<std::size_t>(j)]),
                        prior.b + static_cast<double>(stats.losses[static_cast<std::size_t>(j)]),
                        rng);
    }
    return argmax_uniform(draw, rng);
}

double epsilon_greedy_explore_probability(std::int64_t t, double epsilon, double alpha) {
    if (t < 0) throw InvalidArgument("step index must be nonnegative");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw InvalidArgument("epsilon must lie in [0,1]");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw InvalidArgument("decay alpha must lie in (0,1]");
    }
    return epsilon * std::pow(alpha, static_cast<double>(t));
}

int epsilon_greedy_act(const BanditStats& stats, std::int64_t t, double epsilon,
                       double alpha, Rng& rng) {
    const double p_explore = epsilon_greedy_explore_probability(t, epsilon, alpha);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) < p_explore) {
        std::uniform_int_distribution<int> pick(0, stats.levers() - 1);
        return pick(rng);
    }
    std::vector<double> mean(static_cast<std::size_t>(stats.levers()));
    for (int j = 0; j < stats.levers(); ++j) {
        const double r = static_cast<double>(stats.wins[static_cast<std::size_t>(j)]);
        const double f = static_cast<double>(stats.losses[static_cast<std::size_t>(j)]);
        mean[static_cast<std::size_t>(j)] = (r + 1.0) / (r + f + 2.0);
    }
    return argmax_uniform(mean, rng);
}

Environment make_bandit_environment(const BanditEnv& bandit) {
    validate_bandit_env(bandit);
    Environment env;
    env.actions = Alphabet{bandit.levers()};
    env.observations = Alphabet{2};
    env.respond = [bandit](const InteractionHistory&, int action, Rng& rng) {
        const int o = bandit_step(bandit, action, rng);
        return Step{0, o, static_cast<double>(o)};
    };
    return env;
}

}  // namespace bcr
