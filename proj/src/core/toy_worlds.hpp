#pragma once

#include "core/engine.hpp"

namespace bcr {

// --- Bernoulli coin world -------------------------------------------------
//
// Two actions, two observations. The observation is a coin flip with a fixed
// bias, independent of the action; the reward tag equals the observation.
// The mode for bias b bets deterministically on the likelier face.

Environment make_coin_environment(double bias);

// Policy: point mass on `bet` (pass -1 to bet on the likelier face).
// Hypothesis: P(o=1) = bias regardless of history and action.
OperationMode make_coin_mode(double bias, int bet = -1);

// Mode set over several coin biases with a uniform prior.
ModeSet make_coin_mode_set(const std::vector<double>& biases);

// Mode set whose members share one observation law (bias) but bet on
// different fixed actions: hypotheses identical, policies distinct. The
// posterior has nothing to learn from; only a faulty update moves it.
ModeSet make_identical_hypothesis_mode_set(double bias, int n_modes);

// --- Consecutive-run world ------------------------------------------------
//
// Two actions (0 and 1). The environment pays reward/observation 1 exactly
// when the last k actions all equal its secret target action; any wrong
// action resets the count, and a payout also resets it. Observations carry
// only the payout bit, so the two candidate environments are indistinguishable
// until the first reward.

Environment make_consecutive_run_environment(int k, int target_action);

// Mode believing the target is `target_action`: policy plays it always,
// hypothesis is the deterministic payout automaton above.
OperationMode make_consecutive_run_mode(int k, int target_action);

// Two-mode set (targets 0 and 1) with a uniform prior.
ModeSet make_consecutive_run_mode_set(int k);

}  // namespace bcr
