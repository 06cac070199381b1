#include "core/mdp_agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "core/errors.hpp"

namespace bcr {

namespace {

std::int64_t triple_key(int x, int a, int x2, int n_states, int n_actions) {
    return (static_cast<std::int64_t>(x) * n_actions + a) * n_states + x2;
}

void check_state(int x, int n_states, const char* what) {
    if (x < 0 || x >= n_states) {
        throw InvalidArgument(std::string(what) + " out of range");
    }
}

void check_action(int a, int n_actions) {
    if (a < 0 || a >= n_actions) {
        throw InvalidArgument("action out of range");
    }
}

double draw_normal(double mean, double precision, Rng& rng) {
    std::normal_distribution<double> dist(mean, 1.0 / std::sqrt(precision));
    return dist(rng);
}

// Argmax over scores with exact ties broken uniformly.
template <typename ScoreFn>
int argmax_uniform_by(int count, ScoreFn&& score, Rng& rng) {
    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> ties;
    for (int i = 0; i < count; ++i) {
        const double s = score(i);
        if (s > best) {
            best = s;
            ties.clear();
            ties.push_back(i);
        } else if (s == best) {
            ties.push_back(i);
        }
    }
    if (ties.size() == 1) {
        return ties.front();
    }
    std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
    return ties[pick(rng)];
}

}  // namespace

MdpSufficientStats::MdpSufficientStats(int n_states, int n_actions)
    : n_states_(n_states), n_actions_(n_actions) {
    if (n_states < 1 || n_actions < 1) {
        throw InvalidArgument("state and action counts must be positive");
    }
    by_pair_.resize(static_cast<std::size_t>(n_states) * n_actions);
}

int MdpSufficientStats::update(int x, int a, double reward, int x2) {
    check_state(x, n_states_, "state");
    check_action(a, n_actions_);
    check_state(x2, n_states_, "next state");
    if (std::isnan(reward)) {
        throw InvalidArgument("reward must not be NaN");
    }
    const std::int64_t key = triple_key(x, a, x2, n_states_, n_actions_);
    auto [it, inserted] = index_.try_emplace(key, static_cast<int>(triples_.size()));
    if (inserted) {
        triples_.push_back(Triple{x, a, x2, 0, 0.0});
        by_pair_[static_cast<std::size_t>(pair_index(x, a))].push_back(it->second);
    }
    Triple& t = triples_[static_cast<std::size_t>(it->second)];
    t.n += 1;
    t.mean_reward += (reward - t.mean_reward) / static_cast<double>(t.n);
    return it->second;
}

const MdpSufficientStats::Triple* MdpSufficientStats::find(int x, int a, int x2) const {
    const auto it = index_.find(triple_key(x, a, x2, n_states_, n_actions_));
    if (it == index_.end()) {
        return nullptr;
    }
    return &triples_[static_cast<std::size_t>(it->second)];
}

MdpSufficientStats update_stats(MdpSufficientStats stats, int x, int a, double reward,
                                int x2) {
    stats.update(x, a, reward, x2);
    return stats;
}

void PosteriorHyper::refresh_triple(const MdpSufficientStats& stats, int triple_idx) {
    const auto& t = stats.triples()[static_cast<std::size_t>(triple_idx)];
    if (static_cast<std::size_t>(triple_idx) == entries.size()) {
        entries.push_back(Entry{t.x, t.a, t.x2, 0.0, 0.0});
        by_pair[static_cast<std::size_t>(pair_index(t.x, t.a))].push_back(triple_idx);
        pair_visited[static_cast<std::size_t>(pair_index(t.x, t.a))] = 1;
        for (const int s : {t.x, t.x2}) {
            if (!state_seen[static_cast<std::size_t>(s)]) {
                state_seen[static_cast<std::size_t>(s)] = 1;
                seen_count += 1;
            }
        }
    }
    Entry& e = entries[static_cast<std::size_t>(triple_idx)];
    sum_lambda -= e.lambda;
    e.lambda = lambda0 + precision * static_cast<double>(t.n);
    e.mu = (lambda0 * mu0 + precision * static_cast<double>(t.n) * t.mean_reward) /
           e.lambda;
    sum_lambda += e.lambda;
}

PosteriorHyper posterior_hyperparams(const MdpSufficientStats& stats, double mu0,
                                     double lambda0, double precision) {
    if (!(lambda0 > 0.0) || !(precision > 0.0)) {
        throw InvalidArgument("prior and noise precisions must be positive");
    }
    PosteriorHyper hyper;
    hyper.n_states = stats.n_states();
    hyper.n_actions = stats.n_actions();
    hyper.mu0 = mu0;
    hyper.lambda0 = lambda0;
    hyper.precision = precision;
    hyper.by_pair.resize(static_cast<std::size_t>(hyper.n_states) * hyper.n_actions);
    hyper.pair_visited.assign(hyper.by_pair.size(), 0);
    hyper.state_seen.assign(static_cast<std::size_t>(hyper.n_states), 0);
    for (int i = 0; i < static_cast<int>(stats.triples().size()); ++i) {
        hyper.refresh_triple(stats, i);
    }
    return hyper;
}

double MdpModeSample::max_q(int x) const {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < n_actions; ++a) {
        best = std::max(best, q_at(x, a));
    }
    return best;
}

MdpModeSample make_prior_sample(const PosteriorHyper& hyper, Rng& rng) {
    MdpModeSample sample;
    sample.n_states = hyper.n_states;
    sample.n_actions = hyper.n_actions;
    sample.q.resize(static_cast<std::size_t>(hyper.n_states) * hyper.n_actions);
    for (double& v : sample.q) {
        v = draw_normal(hyper.mu0, hyper.lambda0, rng);
    }
    sample.rho = draw_normal(hyper.mu0, hyper.lambda0, rng);
    return sample;
}

namespace {

bool state_in_region(const PosteriorHyper& hyper, int x) {
    return !hyper.state_seen.empty() && hyper.state_seen[static_cast<std::size_t>(x)];
}

// Per-state value maxima of the current sample, plus their sum over the
// represented region; both conditionals read successor values through these.
std::vector<double> value_maxima(const MdpModeSample& sample) {
    std::vector<double> m(static_cast<std::size_t>(sample.n_states));
    for (int x = 0; x < sample.n_states; ++x) {
        m[static_cast<std::size_t>(x)] = sample.max_q(x);
    }
    return m;
}

double region_value_sum(const PosteriorHyper& hyper, const std::vector<double>& m_val) {
    double total = 0.0;
    for (int x = 0; x < hyper.n_states; ++x) {
        if (state_in_region(hyper, x)) {
            total += m_val[static_cast<std::size_t>(x)];
        }
    }
    return total;
}

NormalParams rho_conditional_with(const MdpModeSample& sample,
                                  const PosteriorHyper& hyper,
                                  const std::vector<double>& m_val, double region_sum) {
    const double region = static_cast<double>(hyper.seen_count);
    const double n_actions = static_cast<double>(hyper.n_actions);
    double weighted = 0.0;
    // Observed triples carry (mu, lambda); subtract the prior term that the
    // blanket sum below would otherwise double-count for them.
    for (const auto& e : hyper.entries) {
        const double q = sample.q_at(e.x, e.a);
        const double m = m_val[static_cast<std::size_t>(e.x2)];
        weighted += e.lambda * (e.mu - q + m) - hyper.lambda0 * (hyper.mu0 - q + m);
    }
    // Prior mass of every triple over the represented region.
    double blanket = 0.0;
    for (int x = 0; x < hyper.n_states; ++x) {
        if (!state_in_region(hyper, x)) {
            continue;
        }
        for (int a = 0; a < hyper.n_actions; ++a) {
            blanket += region * (hyper.mu0 - sample.q_at(x, a)) + region_sum;
        }
    }
    weighted += hyper.lambda0 * blanket;
    const double total =
        hyper.sum_lambda +
        hyper.lambda0 * (region * n_actions * region -
                         static_cast<double>(hyper.entries.size()));
    return NormalParams{weighted / total, total};
}

NormalParams q_conditional_with(const MdpModeSample& sample, const PosteriorHyper& hyper,
                                int x, int a, const std::vector<double>& m_val,
                                double region_sum) {
    if (!state_in_region(hyper, x)) {
        return NormalParams{hyper.mu0, hyper.lambda0};
    }
    const int pair = hyper.pair_index(x, a);
    double weighted = 0.0;
    double total = 0.0;
    double observed_m = 0.0;
    int observed = 0;
    for (int idx : hyper.by_pair[static_cast<std::size_t>(pair)]) {
        const auto& e = hyper.entries[static_cast<std::size_t>(idx)];
        const double m = m_val[static_cast<std::size_t>(e.x2)];
        weighted += e.lambda * (e.mu - sample.rho + m);
        total += e.lambda;
        observed_m += m;
        observed += 1;
    }
    // Prior mass of the successors without data for this pair.
    const double rest = static_cast<double>(hyper.seen_count - observed);
    weighted += hyper.lambda0 *
                (rest * (hyper.mu0 - sample.rho) + (region_sum - observed_m));
    total += hyper.lambda0 * rest;
    return NormalParams{weighted / total, total};
}

}  // namespace

NormalParams rho_conditional(const MdpModeSample& sample, const PosteriorHyper& hyper) {
    if (hyper.entries.empty()) {
        throw InvalidArgument(
            "average-reward conditional requires at least one observed transition");
    }
    const std::vector<double> m_val = value_maxima(sample);
    return rho_conditional_with(sample, hyper, m_val,
                                region_value_sum(hyper, m_val));
}

double gibbs_sample_rho(const MdpModeSample& sample, const PosteriorHyper& hyper,
                        Rng& rng) {
    const NormalParams p = rho_conditional(sample, hyper);
    return draw_normal(p.mean, p.precision, rng);
}

NormalParams q_conditional(const MdpModeSample& sample, const PosteriorHyper& hyper,
                           int x, int a) {
    check_state(x, hyper.n_states, "state");
    check_action(a, hyper.n_actions);
    if (!state_in_region(hyper, x)) {
        return NormalParams{hyper.mu0, hyper.lambda0};
    }
    const std::vector<double> m_val = value_maxima(sample);
    return q_conditional_with(sample, hyper, x, a, m_val,
                              region_value_sum(hyper, m_val));
}

double gibbs_sample_q(const MdpModeSample& sample, const PosteriorHyper& hyper, int x,
                      int a, Rng& rng) {
    const NormalParams p = q_conditional(sample, hyper, x, a);
    return draw_normal(p.mean, p.precision, rng);
}

MdpModeSample gibbs_sweep(MdpModeSample sample, const PosteriorHyper& hyper, Rng& rng) {
    if (sample.n_states != hyper.n_states || sample.n_actions != hyper.n_actions) {
        throw InvalidArgument("sample and posterior shapes disagree");
    }
    for (int x = 0; x < sample.n_states; ++x) {
        if (state_in_region(hyper, x)) {
            continue;
        }
        for (int a = 0; a < sample.n_actions; ++a) {
            sample.q[static_cast<std::size_t>(hyper.pair_index(x, a))] =
                draw_normal(hyper.mu0, hyper.lambda0, rng);
        }
    }
    if (hyper.entries.empty()) {
        sample.rho = draw_normal(hyper.mu0, hyper.lambda0, rng);
        return sample;
    }
    std::vector<double> m_val = value_maxima(sample);
    double region_sum = region_value_sum(hyper, m_val);
    {
        const NormalParams p = rho_conditional_with(sample, hyper, m_val, region_sum);
        sample.rho = draw_normal(p.mean, p.precision, rng);
    }
    for (int x = 0; x < sample.n_states; ++x) {
        if (!state_in_region(hyper, x)) {
            continue;
        }
        for (int a = 0; a < sample.n_actions; ++a) {
            const NormalParams p =
                q_conditional_with(sample, hyper, x, a, m_val, region_sum);
            sample.q[static_cast<std::size_t>(hyper.pair_index(x, a))] =
                draw_normal(p.mean, p.precision, rng);
        }
        // Later states see this state's updated maximum.
        const double updated = sample.max_q(x);
        region_sum += updated - m_val[static_cast<std::size_t>(x)];
        m_val[static_cast<std::size_t>(x)] = updated;
    }
    return sample;
}

int bcr_mdp_act(const MdpModeSample& sample, int x, Rng& rng) {
    check_state(x, sample.n_states, "state");
    return argmax_uniform_by(
        sample.n_actions, [&](int a) { return sample.q_at(x, a); }, rng);
}

BcrMdpAgent::BcrMdpAgent(int n_states, int n_actions, const BcrMdpParams& params,
                         Rng& rng)
    : params_(params), stats_(n_states, n_actions) {
    if (params.sweeps_per_step < 1) {
        throw InvalidArgument("sweeps_per_step must be at least 1");
    }
    hyper_ = posterior_hyperparams(stats_, params.mu0, params.lambda0, params.precision);
    sample_ = make_prior_sample(hyper_, rng);
}

int BcrMdpAgent::act(int state, Rng& rng) { return bcr_mdp_act(sample_, state, rng); }

void BcrMdpAgent::observe(int state, int action, double reward, int next_state,
                          Rng& rng) {
    const int idx = stats_.update(state, action, reward, next_state);
    hyper_.refresh_triple(stats_, idx);
    for (int s = 0; s < params_.sweeps_per_step; ++s) {
        sample_ = gibbs_sweep(std::move(sample_), hyper_, rng);
    }
}

RLearningState::RLearningState(int n_states_in, int n_actions_in)
    : n_states(n_states_in), n_actions(n_actions_in) {
    if (n_states < 1 || n_actions < 1) {
        throw InvalidArgument("state and action counts must be positive");
    }
    q.assign(static_cast<std::size_t>(n_states) * n_actions, 0.0);
    visits.assign(q.size(), 0);
}

double RLearningState::max_q(int x) const {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < n_actions; ++a) {
        best = std::max(best, q_at(x, a));
    }
    return best;
}

void rlearning_step(RLearningState& state, const RLearningParams& params, int x, int a,
                    double reward, int x2) {
    check_state(x, state.n_states, "state");
    check_action(a, state.n_actions);
    check_state(x2, state.n_states, "next state");
    const double q_old = state.q_at(x, a);
    const bool was_greedy = q_old == state.max_q(x);
    const double target = reward - state.rho + state.max_q(x2);
    state.q[static_cast<std::size_t>(x * state.n_actions + a)] =
        (1.0 - params.alpha) * q_old + params.alpha * target;
    if (!params.rho_greedy_only || was_greedy) {
        state.rho = (1.0 - params.beta) * state.rho +
                    params.beta * (reward + state.max_q(x2) - q_old);
    }
    state.visits[static_cast<std::size_t>(x * state.n_actions + a)] += 1;
}

int uncertainty_explore_act(const RLearningState& state, const RLearningParams& params,
                            int x, Rng& rng) {
    check_state(x, state.n_states, "state");
    if (params.p_explore < 0.0 || params.p_explore > 1.0 ||
        std::isnan(params.p_explore)) {
        throw InvalidArgument("exploration probability must lie in [0, 1]");
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const bool explore = params.p_explore > 0.0 && unit(rng) < params.p_explore;
    if (!explore) {
        return argmax_uniform_by(
            state.n_actions, [&](int a) { return state.q_at(x, a); }, rng);
    }
    return argmax_uniform_by(
        state.n_actions,
        [&](int a) {
            const std::int64_t f = state.visits[static_cast<std::size_t>(
                x * state.n_actions + a)];
            if (f == 0) {
                return std::numeric_limits<double>::infinity();
            }
            return state.q_at(x, a) + params.explore_c / static_cast<double>(f);
        },
        rng);
}

RLearningAgent::RLearningAgent(int n_states, int n_actions,
                               const RLearningParams& params)
    : params_(params), state_(n_states, n_actions) {}

int RLearningAgent::act(int state, Rng& rng) {
    return uncertainty_explore_act(state_, params_, state, rng);
}

void RLearningAgent::observe(int state, int action, double reward, int next_state,
                             Rng& /*rng*/) {
    rlearning_step(state_, params_, state, action, reward, next_state);
}

}  // namespace bcr
