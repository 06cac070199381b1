#pragma once

#include <vector>

#include "core/interaction.hpp"

namespace bcr {

// Finite collection of candidate operation modes with a prior over them.
struct ModeSet {
    std::vector<OperationMode> modes;
    std::vector<double> prior;  // strictly positive, sums to one
    Alphabet actions;
    Alphabet observations;

    int size() const { return static_cast<int>(modes.size()); }
};

void validate_mode_set(const ModeSet& ms);

// Posterior over modes kept as normalised log weights (logsumexp == 0).
// Individual weights may be -inf (mode ruled out) but never NaN.
class ModePosterior {
public:
    ModePosterior() = default;
    explicit ModePosterior(std::vector<double> log_weights);  // normalises

    static ModePosterior uniform(int n);
    static ModePosterior from_prior(const std::vector<double>& prior);

    int size() const { return static_cast<int>(log_w_.size()); }
    double log_weight(int m) const { return log_w_[static_cast<std::size_t>(m)]; }
    const std::vector<double>& log_weights() const { return log_w_; }
    std::vector<double> probabilities() const;
    double probability(int m) const;

private:
    std::vector<double> log_w_;
};

// logsumexp with max-subtraction; -inf entries are permitted.
double log_sum_exp(const std::vector<double>& v);

// Condition the posterior on one observed step. `history` is the interaction
// record *before* this step; (action, observation) is the step itself. The
// action enters only as the conditional of the observation model — it carries
// no likelihood factor of its own, which is what makes the update an
// intervention rather than plain evidence.
ModePosterior bcr_observe(const ModePosterior& posterior, const ModeSet& ms,
                          const InteractionHistory& history, int action,
                          int observation);

// Sample a mode from the posterior, then an action from that mode's policy.
struct SampledAction {
    int action = 0;
    int mode = 0;
};
SampledAction bcr_act(const ModePosterior& posterior, const ModeSet& ms,
                      const InteractionHistory& history, Rng& rng);

// The naive-mixture update treats a symbol emitted by the agent itself as
// evidence. ActionEvent applies the policy factor P(a|m, history); it is
// exactly the step the control rule refuses to take.
struct ActionEvent {
    int action = 0;
};
struct ObservationEvent {
    int action = 0;
    int observation = 0;
};
ModePosterior naive_update(const ModePosterior& posterior, const ModeSet& ms,
                           const InteractionHistory& history, ActionEvent ev);
ModePosterior naive_update(const ModePosterior& posterior, const ModeSet& ms,
                           const InteractionHistory& history, ObservationEvent ev);

// Posterior-weighted mixture of the mode policies: the marginal action law the
// sampling in bcr_act realises.
std::vector<double> predictive_action_distribution(const ModePosterior& posterior,
                                                   const ModeSet& ms,
                                                   const InteractionHistory& history);

// Agent driven by the Bayesian control rule over a finite mode set. The mode
// used for acting is resampled every `mode_hold` steps (default every step);
// the posterior is conditioned on every observation regardless.
class BcrAgent : public Agent {
public:
    explicit BcrAgent(ModeSet ms, int mode_hold = 1);

    int act(const InteractionHistory& history, Rng& rng) override;
    void update(const InteractionHistory& history, const Step& step) override;

    const ModeSet& mode_set() const { return ms_; }
    const ModePosterior& posterior() const { return posterior_; }
    const std::vector<int>& acting_modes() const { return acting_modes_; }
    const std::vector<ModePosterior>& posterior_series() const { return series_; }

private:
    ModeSet ms_;
    ModePosterior posterior_;
    int mode_hold_ = 1;
    int held_mode_ = -1;
    long steps_acted_ = 0;
    std::vector<int> acting_modes_;
    std::vector<ModePosterior> series_;  // posterior before each step (prior first)
};

// Same mixture, but weights updated on the agent's own actions as well as on
// observations. Kept for contrast experiments; known to be inconsistent.
class NaiveMixtureAgent : public Agent {
public:
    explicit NaiveMixtureAgent(ModeSet ms);

    int act(const InteractionHistory& history, Rng& rng) override;
    void update(const InteractionHistory& history, const Step& step) override;

    const ModePosterior& weights() const { return weights_; }

private:
    ModeSet ms_;
    ModePosterior weights_;
};

// A control-rule run kept with everything diagnostics need: the history, the
// posterior before every step (entry 0 is the prior, entry t the final state)
// and which mode acted at each step.
struct RecordedRun {
    InteractionHistory history;
    std::vector<ModePosterior> posteriors;
    std::vector<int> acting_modes;
};

RecordedRun record_bcr_run(const ModeSet& ms, const Environment& env, int steps,
                           std::uint64_t seed, int mode_hold = 1);

}  // namespace bcr
