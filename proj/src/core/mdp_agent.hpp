#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "core/rng.hpp"

namespace bcr {

// Counts and running reward means per observed (state, action, next-state)
// transition. Only triples that actually occurred are represented.
class MdpSufficientStats {
public:
    struct Triple {
        int x = 0;
        int a = 0;
        int x2 = 0;
        std::int64_t n = 0;
        double mean_reward = 0.0;
    };

    MdpSufficientStats(int n_states, int n_actions);

    // Record one transition; returns the triple's index (stable over time).
    int update(int x, int a, double reward, int x2);

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    int pair_index(int x, int a) const { return x * n_actions_ + a; }
    const std::vector<Triple>& triples() const { return triples_; }
    const std::vector<int>& pair_triples(int pair) const {
        return by_pair_[static_cast<std::size_t>(pair)];
    }
    bool pair_visited(int pair) const { return !by_pair_[static_cast<std::size_t>(pair)].empty(); }
    const Triple* find(int x, int a, int x2) const;

private:
    int n_states_ = 0;
    int n_actions_ = 0;
    std::vector<Triple> triples_;
    std::unordered_map<std::int64_t, int> index_;
    std::vector<std::vector<int>> by_pair_;
};

// Free-function form of the update (value semantics), mirroring the rest of
// the library's update operations.
MdpSufficientStats update_stats(MdpSufficientStats stats, int x, int a, double reward,
                                int x2);

// Conjugate posterior over the consistency-residual means: one normal per
// observed triple with mean mu and precision-scale lambda,
//   lambda = lambda0 + precision * n
//   mu     = (lambda0 * mu0 + precision * n * mean_reward) / lambda.
// The model covers every triple (x, a, x2) over the represented region — the
// states that have occurred in a recorded transition. Triples without data
// keep the prior (mu0, lambda0) and still contribute that mass to the
// conditionals below, which keeps never-tried actions competitive with the
// current value level instead of pinned at mu0.
struct PosteriorHyper {
    struct Entry {
        int x = 0;
        int a = 0;
        int x2 = 0;
        double mu = 0.0;
        double lambda = 0.0;
    };

    int n_states = 0;
    int n_actions = 0;
    double mu0 = 1.0;
    double lambda0 = 1.0;
    double precision = 1.0;
    std::vector<Entry> entries;          // aligned with the stats' triple order
    std::vector<std::vector<int>> by_pair;
    std::vector<std::uint8_t> pair_visited;
    std::vector<std::uint8_t> state_seen;  // appeared as source or successor
    int seen_count = 0;
    double sum_lambda = 0.0;

    int pair_index(int x, int a) const { return x * n_actions + a; }

    // Rebuild one entry from the stats (incremental path used by the agent).
    void refresh_triple(const MdpSufficientStats& stats, int triple_idx);
};

PosteriorHyper posterior_hyperparams(const MdpSufficientStats& stats, double mu0,
                                     double lambda0, double precision);

// One joint draw of the mode parameters: average reward rho and a dense
// action-value table. Entries of unrepresented states hold fresh prior draws
// refreshed once per sweep; the rest persist as the chain's state.
struct MdpModeSample {
    int n_states = 0;
    int n_actions = 0;
    double rho = 0.0;
    std::vector<double> q;  // n_states * n_actions

    double q_at(int x, int a) const {
        return q[static_cast<std::size_t>(x * n_actions + a)];
    }
    double max_q(int x) const;
};

MdpModeSample make_prior_sample(const PosteriorHyper& hyper, Rng& rng);

struct NormalParams {
    double mean = 0.0;
    double precision = 0.0;
};

// Full conditional of rho given the q table. The sum runs over every triple
// of the represented region: observed entries carry their posterior
// (mu, lambda), the rest carry the prior (mu0, lambda0). Throws when no data
// has been observed (the represented region is empty).
NormalParams rho_conditional(const MdpModeSample& sample, const PosteriorHyper& hyper);
double gibbs_sample_rho(const MdpModeSample& sample, const PosteriorHyper& hyper,
                        Rng& rng);

// Full conditional of q(x,a) given rho and the value maxima of the successor
// states (held constant within the draw). Successors run over the represented
// region: observed entries carry (mu, lambda), the remaining states carry the
// prior mass, so a never-tried action of a represented state floats at
// mu0 - rho + mean successor value. Pairs of states outside the represented
// region return the plain prior.
NormalParams q_conditional(const MdpModeSample& sample, const PosteriorHyper& hyper,
                           int x, int a);
double gibbs_sample_q(const MdpModeSample& sample, const PosteriorHyper& hyper, int x,
                      int a, Rng& rng);

// One sweep: refresh entries of unrepresented states with prior draws,
// resample rho (prior-seeded when no data), then resample every pair of every
// represented state in row-major order, each conditional using the values
// updated so far.
MdpModeSample gibbs_sweep(MdpModeSample sample, const PosteriorHyper& hyper, Rng& rng);

// Greedy action of the sampled mode at state x; exact ties break uniformly.
int bcr_mdp_act(const MdpModeSample& sample, int x, Rng& rng);

// --- learning agents over the (state, action, reward, next-state) loop -----

class GridAgent {
public:
    virtual ~GridAgent() = default;
    virtual int act(int state, Rng& rng) = 0;
    virtual void observe(int state, int action, double reward, int next_state,
                         Rng& rng) = 0;
};

struct BcrMdpParams {
    double mu0 = 1.0;
    double lambda0 = 1.0;
    double precision = 1.0;
    int sweeps_per_step = 1;
};

class BcrMdpAgent : public GridAgent {
public:
    BcrMdpAgent(int n_states, int n_actions, const BcrMdpParams& params, Rng& rng);

    int act(int state, Rng& rng) override;
    void observe(int state, int action, double reward, int next_state, Rng& rng) override;

    const MdpModeSample& sample() const { return sample_; }
    const MdpSufficientStats& stats() const { return stats_; }
    const PosteriorHyper& hyper() const { return hyper_; }

private:
    BcrMdpParams params_;
    MdpSufficientStats stats_;
    PosteriorHyper hyper_;
    MdpModeSample sample_;
};

// Average-reward R-learning with the visit-count exploration bonus.
struct RLearningParams {
    double alpha = 0.5;        // value learning rate
    double beta = 0.001;       // average-reward learning rate
    double explore_c = 30.0;   // bonus scale C in Q + C/F
    double p_explore = 1.0;    // probability of taking the bonus-greedy action
    bool rho_greedy_only = false;  // update rho only after greedy actions
};

struct RLearningState {
    RLearningState(int n_states, int n_actions);

    int n_states = 0;
    int n_actions = 0;
    double rho = 0.0;
    std::vector<double> q;           // init 0
    std::vector<std::int64_t> visits;  // F(x,a)

    double q_at(int x, int a) const {
        return q[static_cast<std::size_t>(x * n_actions + a)];
    }
    double max_q(int x) const;
};

void rlearning_step(RLearningState& state, const RLearningParams& params, int x, int a,
                    double reward, int x2);

int uncertainty_explore_act(const RLearningState& state, const RLearningParams& params,
                            int x, Rng& rng);

class RLearningAgent : public GridAgent {
public:
    RLearningAgent(int n_states, int n_actions, const RLearningParams& params);

    int act(int state, Rng& rng) override;
    void observe(int state, int action, double reward, int next_state, Rng& rng) override;

    const RLearningState& state() const { return state_; }

private:
    RLearningParams params_;
    RLearningState state_;
};

}  // namespace bcr
