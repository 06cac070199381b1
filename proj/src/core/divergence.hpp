#pragma once

#include <vector>

#include "core/engine.hpp"

namespace bcr {

// Per-step log-likelihood ratio record between a reference mode m_star and a
// competitor m along one realised interaction:
//   increment[tau] = ln P(o_tau | m_star, ...) - ln P(o_tau | m, ...).
// The partial sums are the divergence process d_t(m_star || m).
struct DivergenceTrace {
    int m_star = 0;
    int m = 0;
    std::vector<double> increments;
    std::vector<int> acting_mode;  // which mode acted at each step
    bool has_infinite = false;     // some increment is +inf (m ruled out)

    std::vector<double> partial_sums() const;
    double total() const;
};

DivergenceTrace build_divergence_trace(const InteractionHistory& history,
                                       const ModeSet& ms, int m_star, int m,
                                       const std::vector<int>& acting_modes);

// Split the divergence total into per-acting-mode partial sums g(m'; T_m'),
// indexed by mode. Summing the vector reconstructs total() exactly.
std::vector<double> decompose_subdivergences(const DivergenceTrace& trace,
                                             int mode_count);

// Monte-Carlo check that each realised sub-divergence sits near its
// expectation G(m'; T): the steps in T are resampled (action from m', the
// observation from m_star) while the complement keeps its recorded symbols.
struct BoundednessEntry {
    int policy_mode = 0;          // m' whose acting steps form T
    int sample_count = 0;         // |T| summed over traces
    double realized = 0.0;        // g(m'; T) summed over traces
    double estimate_mean = 0.0;   // Monte-Carlo mean of the resampled sum
    double estimate_stderr = 0.0;
    double max_abs_deviation = 0.0;  // max over traces of |g - G_hat|
    bool insufficient = false;       // T empty in every trace
};

struct BoundednessReport {
    double delta = 0.05;  // confidence level the caller plans to quote
    std::vector<BoundednessEntry> entries;  // one per mode
};

BoundednessReport empirical_boundedness(const std::vector<RecordedRun>& runs,
                                        const ModeSet& ms, int m_star, int m,
                                        int n_monte_carlo, std::uint64_t seed,
                                        double delta = 0.05);

// Smallest posterior mass the reference mode ever takes in the series, and
// whether it undercuts the guaranteed floor lambda / |modes|.
struct PosteriorFloorReport {
    double min_posterior = 1.0;
    double floor = 0.0;
    bool violated = false;
};

PosteriorFloorReport posterior_floor_monitor(const std::vector<ModePosterior>& series,
                                             int m_star, double lambda);

// Total-variation distance, per step, between the posterior-mixed action law
// and the reference mode's own policy.
std::vector<double> convergence_monitor(const RecordedRun& run, const ModeSet& ms,
                                        int m_star);

// Diagnostic table: t, divergence partial sum, per-mode sub-divergence partial
// sums, posterior of m_star, and the policy TV distance.
std::string format_divergence_csv(const RecordedRun& run, const ModeSet& ms,
                                  int m_star, int m);
void write_divergence_csv(const std::string& path, const RecordedRun& run,
                          const ModeSet& ms, int m_star, int m);

}  // namespace bcr
