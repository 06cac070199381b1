#include "core/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bcr {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Per-mode log-likelihood of one symbol, shared by the rule update and the
// naive update. `factor(m)` must return a probability.
template <typename F>
std::vector<double> reweighted(const ModePosterior& posterior, int n, F factor,
                               const char* context) {
    std::vector<double> lw(static_cast<std::size_t>(n));
    for (int m = 0; m < n; ++m) {
        const double p = factor(m);
        if (!(p >= 0.0 && p <= 1.0 + kDistributionTolerance)) {
            throw InvalidArgument(std::string(context) + ": likelihood outside [0,1]");
        }
        lw[static_cast<std::size_t>(m)] =
            posterior.log_weight(m) + (p > 0.0 ? std::log(p) : kNegInf);
    }
    bool any_finite = false;
    for (double v : lw) {
        if (std::isfinite(v)) any_finite = true;
    }
    if (!any_finite) {
        throw ModelClassExhausted(std::string(context) +
                                  ": every mode assigns zero probability to the data");
    }
    return lw;
}
}  // namespace

void validate_mode_set(const ModeSet& ms) {
    if (ms.modes.empty()) {
        throw InvalidArgument("mode set is empty");
    }
    if (ms.prior.size() != ms.modes.size()) {
        throw InvalidArgument("mode prior length differs from the number of modes");
    }
    validate_distribution(ms.prior, "mode prior");
    for (std::size_t m = 0; m < ms.prior.size(); ++m) {
        if (ms.prior[m] <= 0.0) {
            throw InvalidArgument("mode prior must be strictly positive (mode " +
                                  std::to_string(m) + ")");
        }
    }
    if (ms.actions.size <= 0 || ms.observations.size <= 0) {
        throw InvalidArgument("mode set alphabets must be non-empty");
    }
    for (const OperationMode& mode : ms.modes) {
        if (!mode.policy || !mode.hypothesis) {
            throw InvalidArgument("mode '" + mode.label + "' lacks a policy or hypothesis");
        }
    }
}

double log_sum_exp(const std::vector<double>& v) {
    double mx = kNegInf;
    for (double x : v) {
        if (std::isnan(x)) throw InvalidArgument("log_sum_exp: NaN input");
        mx = std::max(mx, x);
    }
    if (mx == kNegInf) return kNegInf;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

ModePosterior::ModePosterior(std::vector<double> log_weights) : log_w_(std::move(log_weights)) {
    if (log_w_.empty()) {
        throw InvalidArgument("posterior over zero modes");
    }
    const double z = log_sum_exp(log_w_);
    if (!std::isfinite(z)) {
        throw ModelClassExhausted("posterior normalisation: all weights are zero");
    }
    for (double& v : log_w_) v -= z;
}

ModePosterior ModePosterior::uniform(int n) {
    if (n <= 0) throw InvalidArgument("posterior over zero modes");
    return ModePosterior(std::vector<double>(static_cast<std::size_t>(n),
                                             -std::log(static_cast<double>(n))));
}

ModePosterior ModePosterior::from_prior(const std::vector<double>& prior) {
    validate_distribution(prior, "mode prior");
    std::vector<double> lw(prior.size());
    for (std::size_t i = 0; i < prior.size(); ++i) {
        lw[i] = prior[i] > 0.0 ? std::log(prior[i]) : kNegInf;
    }
    return ModePosterior(std::move(lw));
}

std::vector<double> ModePosterior::probabilities() const {
    std::vector<double> p(log_w_.size());
    for (std::size_t i = 0; i < log_w_.size(); ++i) p[i] = std::exp(log_w_[i]);
    return p;
}

double ModePosterior::probability(int m) const {
    return std::exp(log_w_[static_cast<std::size_t>(m)]);
}

ModePosterior bcr_observe(const ModePosterior& posterior, const ModeSet& ms,
                          const InteractionHistory& history, int action,
                          int observation) {
    if (posterior.size() != ms.size()) {
        throw InvalidArgument("posterior size differs from mode set size");
    }
    check_symbol(ms.actions, action, "bcr_observe action");
    check_symbol(ms.observations, observation, "bcr_observe observation");
    auto factor = [&](int m) {
        std::vector<double> po = ms.modes[static_cast<std::size_t>(m)].hypothesis(history, action);
        validate_distribution(po, "bcr_observe hypothesis");
        if (static_cast<int>(po.size()) != ms.observations.size) {
            throw InvalidArgument("hypothesis vector length does not match the observation alphabet");
        }
        return po[static_cast<std::size_t>(observation)];
    };
    return ModePosterior(reweighted(posterior, ms.size(), factor, "bcr_observe"));
}

SampledAction bcr_act(const ModePosterior& posterior, const ModeSet& ms,
                      const InteractionHistory& history, Rng& rng) {
    if (posterior.size() != ms.size()) {
        throw InvalidArgument("posterior size differs from mode set size");
    }
    const int mode = sample_from_distribution(posterior.probabilities(), rng);
    std::vector<double> pa = ms.modes[static_cast<std::size_t>(mode)].policy(history);
    validate_distribution(pa, "bcr_act policy");
    if (static_cast<int>(pa.size()) != ms.actions.size) {
        throw InvalidArgument("policy vector length does not match the action alphabet");
    }
    return SampledAction{sample_from_distribution(pa, rng), mode};
}

ModePosterior naive_update(const ModePosterior& posterior, const ModeSet& ms,
                           const InteractionHistory& history, ActionEvent ev) {
    if (posterior.size() != ms.size()) {
        throw InvalidArgument("posterior size differs from mode set size");
    }
    check_symbol(ms.actions, ev.action, "naive_update action");
    auto factor = [&](int m) {
        std::vector<double> pa = ms.modes[static_cast<std::size_t>(m)].policy(history);
        validate_distribution(pa, "naive_update policy");
        if (static_cast<int>(pa.size()) != ms.actions.size) {
            throw InvalidArgument("policy vector length does not match the action alphabet");
        }
        return pa[static_cast<std::size_t>(ev.action)];
    };
    return ModePosterior(reweighted(posterior, ms.size(), factor, "naive_update(action)"));
}

ModePosterior naive_update(const ModePosterior& posterior, const ModeSet& ms,
                           const InteractionHistory& history, ObservationEvent ev) {
    // On observations the naive mixture and the control rule agree.
    return bcr_observe(posterior, ms, history, ev.action, ev.observation);
}

std::vector<double> predictive_action_distribution(const ModePosterior& posterior,
                                                   const ModeSet& ms,
                                                   const InteractionHistory& history) {
    if (posterior.size() != ms.size()) {
        throw InvalidArgument("posterior size differs from mode set size");
    }
    std::vector<double> mix(static_cast<std::size_t>(ms.actions.size), 0.0);
    const std::vector<double> w = posterior.probabilities();
    for (int m = 0; m < ms.size(); ++m) {
        if (w[static_cast<std::size_t>(m)] == 0.0) continue;
        std::vector<double> pa = ms.modes[static_cast<std::size_t>(m)].policy(history);
        validate_distribution(pa, "predictive_action_distribution policy");
        if (static_cast<int>(pa.size()) != ms.actions.size) {
            throw InvalidArgument("policy vector length does not match the action alphabet");
        }
        for (std::size_t a = 0; a < pa.size(); ++a) {
            mix[a] += w[static_cast<std::size_t>(m)] * pa[a];
        }
    }
    return mix;
}

BcrAgent::BcrAgent(ModeSet ms, int mode_hold)
    : ms_(std::move(ms)), mode_hold_(mode_hold) {
    validate_mode_set(ms_);
    if (mode_hold_ < 1) {
        throw InvalidArgument("mode hold length must be at least 1");
    }
    posterior_ = ModePosterior::from_prior(ms_.prior);
}

int BcrAgent::act(const InteractionHistory& history, Rng& rng) {
    if (held_mode_ < 0 || steps_acted_ % mode_hold_ == 0) {
        held_mode_ = sample_from_distribution(posterior_.probabilities(), rng);
    }
    ++steps_acted_;
    acting_modes_.push_back(held_mode_);
    std::vector<double> pa = ms_.modes[static_cast<std::size_t>(held_mode_)].policy(history);
    validate_distribution(pa, "BcrAgent policy");
    return sample_from_distribution(pa, rng);
}

void BcrAgent::update(const InteractionHistory& history, const Step& step) {
    if (series_.empty()) series_.push_back(posterior_);
    posterior_ = bcr_observe(posterior_, ms_, history, step.action, step.observation);
    series_.push_back(posterior_);
}

NaiveMixtureAgent::NaiveMixtureAgent(ModeSet ms) : ms_(std::move(ms)) {
    validate_mode_set(ms_);
    weights_ = ModePosterior::from_prior(ms_.prior);
}

int NaiveMixtureAgent::act(const InteractionHistory& history, Rng& rng) {
    const int mode = sample_from_distribution(weights_.probabilities(), rng);
    std::vector<double> pa = ms_.modes[static_cast<std::size_t>(mode)].policy(history);
    validate_distribution(pa, "NaiveMixtureAgent policy");
    const int action = sample_from_distribution(pa, rng);
    weights_ = naive_update(weights_, ms_, history, ActionEvent{action});
    return action;
}

void NaiveMixtureAgent::update(const InteractionHistory& history, const Step& step) {
    weights_ = naive_update(weights_, ms_, history,
                            ObservationEvent{step.action, step.observation});
}

RecordedRun record_bcr_run(const ModeSet& ms, const Environment& env, int steps,
                           std::uint64_t seed, int mode_hold) {
    BcrAgent agent(ms, mode_hold);
    RecordedRun run;
    run.history = run_interaction(agent, env, steps, seed);
    run.posteriors = agent.posterior_series();
    run.acting_modes = agent.acting_modes();
    if (run.posteriors.empty()) {
        run.posteriors.push_back(ModePosterior::from_prior(ms.prior));
    }
    return run;
}

}  // namespace bcr
