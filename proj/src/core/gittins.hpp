#pragma once

#include <string>
#include <vector>

#include "core/bandit.hpp"

namespace bcr {

// Gittins indices for the Bernoulli bandit under geometric discounting,
// tabulated over the Beta-posterior lattice of (successes, failures) pairs
// with successes + failures < horizon. The index of a state is the
// per-step retirement rate lambda at which playing on and retiring tie; it is
// found by bisection to `tolerance`, with the lookahead truncated at depth
// `horizon` (states at the cut have zero continuation value).
//
// The bisection is shared across states: every candidate lambda is a dyadic
// midpoint, and one backward dynamic-programming pass over the whole lattice
// refines the bracket of every state whose bisection currently needs that
// lambda. This is equivalent to independent per-state bisection at a fraction
// of the cost.
class GittinsTable {
public:
    static GittinsTable compute(int horizon, double discount, double tolerance = 1e-4);

    // Binary cache round-trip; load validates the header.
    void save(const std::string& path) const;
    static GittinsTable load(const std::string& path);

    // Load from `cache_dir` if a file keyed by (horizon, discount, tolerance)
    // exists there, otherwise compute and write it. Empty dir disables caching.
    static GittinsTable load_or_compute(int horizon, double discount, double tolerance,
                                        const std::string& cache_dir);
    static std::string cache_file_name(int horizon, double discount, double tolerance);

    double index(int successes, int failures) const;

    int horizon() const { return horizon_; }
    double discount() const { return discount_; }
    double tolerance() const { return tolerance_; }
    std::size_t size() const { return index_.size(); }

private:
    GittinsTable() = default;

    int horizon_ = 0;
    double discount_ = 0.0;
    double tolerance_ = 0.0;
    std::vector<double> index_;  // triangular layout: offset(d) + s, d = s + f
};

// Largest per-lever index wins; exact ties are broken uniformly. Throws when
// any lever's pull count has outgrown the table's lattice.
int gittins_act(const BanditStats& stats, const GittinsTable& table, Rng& rng);

}  // namespace bcr
