#pragma once

#include <cstdint>
#include <vector>

#include "core/interaction.hpp"

namespace bcr {

// N-armed Bernoulli bandit: lever i pays 1 with probability biases[i].
struct BanditEnv {
    std::vector<double> biases;

    int levers() const { return static_cast<int>(biases.size()); }
};

void validate_bandit_env(const BanditEnv& env);

int bandit_step(const BanditEnv& env, int lever, Rng& rng);

// Per-lever win/loss tallies: the sufficient statistic of the interaction.
struct BanditStats {
    explicit BanditStats(int levers);
    std::vector<std::int64_t> wins;    // r_j
    std::vector<std::int64_t> losses;  // f_j

    int levers() const { return static_cast<int>(wins.size()); }
    bool operator==(const BanditStats&) const = default;
};

BanditStats bandit_update(BanditStats stats, int lever, int reward);

struct BetaPrior {
    double a = 1.0;
    double b = 1.0;
};

// The control rule for this domain: draw each lever's bias from its posterior
// Beta(r+a, f+b) and play the argmax (exact ties broken uniformly).
int thompson_act(const BanditStats& stats, Rng& rng, const BetaPrior& prior = {});

// Greedy on the posterior mean (r+1)/(r+f+2) with exploration probability
// epsilon * alpha^t (t counts completed pulls); exploration picks a uniform
// lever. Ties in the greedy branch are broken uniformly.
int epsilon_greedy_act(const BanditStats& stats, std::int64_t t, double epsilon,
                       double alpha, Rng& rng);

// Exploration probability used above, exposed for tests/diagnostics.
double epsilon_greedy_explore_probability(std::int64_t t, double epsilon, double alpha);

// Beta draw via two gamma variates.
double sample_beta(double a, double b, Rng& rng);

// Wrap a bandit environment in the generic interaction protocol: action =
// lever, observation = payout bit (also the reward tag).
Environment make_bandit_environment(const BanditEnv& env);

}  // namespace bcr
