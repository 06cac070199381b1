#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace bcr {

// Finite symbol alphabet; symbols are 0-based indices below `size`.
struct Alphabet {
    int size = 0;
};

void check_symbol(const Alphabet& alphabet, int symbol, const char* what);

// Distributions over a finite alphabet are plain probability vectors. Anything
// consumed by the library is validated first: no negative entries, total mass
// within kDistributionTolerance of one.
inline constexpr double kDistributionTolerance = 1e-12;

void validate_distribution(const std::vector<double>& p, const char* context);

// Sample an index from a validated probability vector.
int sample_from_distribution(const std::vector<double>& p, Rng& rng);

// One completed protocol round: the agent emitted `action`, the environment
// answered `observation`. `reward` is a domain side-channel tag (bandit payout,
// grid reward); the probabilistic machinery conditions only on `observation`.
struct Step {
    int action = 0;
    int observation = 0;
    double reward = 0.0;

    bool operator==(const Step&) const = default;
};

// Strictly alternating action/observation record. Actions and observations can
// only be appended in protocol order; a trailing unanswered action is allowed
// and tracked explicitly.
class InteractionHistory {
public:
    void push(const Step& step);
    void push_action(int action);
    void push_observation(int observation, double reward = 0.0);

    std::size_t size() const { return steps_.size(); }
    bool empty() const { return steps_.empty() && !pending_; }
    const Step& operator[](std::size_t i) const { return steps_[i]; }
    const Step& back() const;
    const std::vector<Step>& steps() const { return steps_; }
    std::optional<int> pending_action() const { return pending_; }

    // Copy of the first `n` completed steps (no pending action).
    InteractionHistory prefix(std::size_t n) const;

    bool operator==(const InteractionHistory&) const = default;

private:
    std::vector<Step> steps_;
    std::optional<int> pending_;
};

// P(a_t | history so far) as a probability vector over the action alphabet.
using PolicyFn = std::function<std::vector<double>(const InteractionHistory&)>;

// P(o_t | history so far, a_t) as a probability vector over the observation
// alphabet. The history argument never includes the step being predicted.
using HypothesisFn =
    std::function<std::vector<double>(const InteractionHistory&, int action)>;

// A candidate "mode of operation": a policy paired with the hypothesis about
// the environment under which that policy is the intended behaviour.
struct OperationMode {
    std::string label;
    PolicyFn policy;
    HypothesisFn hypothesis;
};

// Environment side of the protocol: given the history and the latest action,
// produce (observation, reward tag). All randomness comes from `rng`, so the
// response is a pure function of (history, action, generator state).
struct Environment {
    Alphabet actions;
    Alphabet observations;
    std::function<Step(const InteractionHistory&, int action, Rng&)> respond;
};

// Agent side used by run_interaction: act, then digest the completed step.
// `history` is always the record *before* the step in question.
class Agent {
public:
    virtual ~Agent() = default;
    virtual int act(const InteractionHistory& history, Rng& rng) = 0;
    virtual void update(const InteractionHistory& history, const Step& step) = 0;
};

// Execute one protocol round: sample an action from `policy`, let the
// environment answer. Returns the completed step (not yet appended anywhere).
Step couple_step(const PolicyFn& policy, const Environment& env,
                 const InteractionHistory& history, Rng& rng);

// Run a full interaction of `t_max` rounds between agent and environment.
InteractionHistory run_interaction(Agent& agent, const Environment& env,
                                   int t_max, std::uint64_t seed);

// Sum over the recorded steps of ln P(o_tau | mode, prefix, a_tau): the mode's
// cumulative observation log-likelihood. Actions contribute nothing.
double observation_log_likelihood(const OperationMode& mode,
                                  const InteractionHistory& history);

}  // namespace bcr
