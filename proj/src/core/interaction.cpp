#include "core/interaction.hpp"

#include <cmath>
#include <numeric>

namespace bcr {

void check_symbol(const Alphabet& alphabet, int symbol, const char* what) {
    if (symbol < 0 || symbol >= alphabet.size) {
        throw InvalidArgument(std::string(what) + " symbol " + std::to_string(symbol) +
                              " outside alphabet of size " + std::to_string(alphabet.size));
    }
}

void validate_distribution(const std::vector<double>& p, const char* context) {
    if (p.empty()) {
        throw InvalidArgument(std::string(context) + ": empty probability vector");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double v = p[i];
        if (!(v >= 0.0)) {  // catches negatives and NaN
            throw InvalidArgument(std::string(context) + ": entry " + std::to_string(i) +
                                  " is negative or NaN (" + std::to_string(v) + ")");
        }
        total += v;
    }
    if (std::abs(total - 1.0) > kDistributionTolerance * static_cast<double>(p.size())) {
        throw InvalidArgument(std::string(context) + ": probabilities sum to " +
                              std::to_string(total) + ", not 1");
    }
}

int sample_from_distribution(const std::vector<double>& p, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc += p[i];
        if (u < acc) return static_cast<int>(i);
    }
    // Rounding can leave acc marginally below 1; fall back to the last
    // positive-mass entry.
    for (std::size_t i = p.size(); i-- > 0;) {
        if (p[i] > 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(p.size()) - 1;
}

void InteractionHistory::push(const Step& step) {
    if (pending_) {
        throw InvalidArgument("push(step) while an action is pending an observation");
    }
    steps_.push_back(step);
}

void InteractionHistory::push_action(int action) {
    if (pending_) {
        throw InvalidArgument("two actions in a row violate the interaction protocol");
    }
    pending_ = action;
}

void InteractionHistory::push_observation(int observation, double reward) {
    if (!pending_) {
        throw InvalidArgument("observation without a preceding action");
    }
    steps_.push_back(Step{*pending_, observation, reward});
    pending_.reset();
}

const Step& InteractionHistory::back() const {
    if (steps_.empty()) {
        throw InvalidArgument("back() on an empty interaction history");
    }
    return steps_.back();
}

InteractionHistory InteractionHistory::prefix(std::size_t n) const {
    if (n > steps_.size()) {
        throw InvalidArgument("prefix length exceeds history length");
    }
    InteractionHistory out;
    out.steps_.assign(steps_.begin(), steps_.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
}

Step couple_step(const PolicyFn& policy, const Environment& env,
                 const InteractionHistory& history, Rng& rng) {
    std::vector<double> pa = policy(history);
    validate_distribution(pa, "couple_step policy");
    if (static_cast<int>(pa.size()) != env.actions.size) {
        throw InvalidArgument("policy vector length does not match the action alphabet");
    }
    const int action = sample_from_distribution(pa, rng);
    Step step = env.respond(history, action, rng);
    step.action = action;
    check_symbol(env.observations, step.observation, "environment observation");
    return step;
}

InteractionHistory run_interaction(Agent& agent, const Environment& env,
                                   int t_max, std::uint64_t seed) {
    if (t_max < 0) {
        throw InvalidArgument("run_interaction: negative horizon");
    }
    Rng rng = make_rng(seed);
    InteractionHistory history;
    for (int t = 0; t < t_max; ++t) {
        const int action = agent.act(history, rng);
        check_symbol(env.actions, action, "agent action");
        Step step = env.respond(history, action, rng);
        step.action = action;
        check_symbol(env.observations, step.observation, "environment observation");
        agent.update(history, step);
        history.push(step);
    }
    return history;
}

double observation_log_likelihood(const OperationMode& mode,
                                  const InteractionHistory& history) {
    double total = 0.0;
    InteractionHistory prefix;
    for (std::size_t t = 0; t < history.size(); ++t) {
        const Step& step = history[t];
        std::vector<double> po = mode.hypothesis(prefix, step.action);
        validate_distribution(po, "observation_log_likelihood hypothesis");
        if (step.observation < 0 || step.observation >= static_cast<int>(po.size())) {
            throw InvalidArgument("recorded observation outside the hypothesis support");
        }
        total += std::log(po[static_cast<std::size_t>(step.observation)]);
        prefix.push(step);
    }
    return total;
}

}  // namespace bcr
