#include "core/divergence.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "core/csv.hpp"

namespace bcr {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double step_log_likelihood(const OperationMode& mode, const InteractionHistory& prefix,
                           int action, int observation) {
    std::vector<double> po = mode.hypothesis(prefix, action);
    validate_distribution(po, "divergence hypothesis");
    const double p = po[static_cast<std::size_t>(observation)];
    return p > 0.0 ? std::log(p) : -kInf;
}
}  // namespace

std::vector<double> DivergenceTrace::partial_sums() const {
    std::vector<double> d(increments.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < increments.size(); ++t) {
        acc += increments[t];
        d[t] = acc;
    }
    return d;
}

double DivergenceTrace::total() const {
    double acc = 0.0;
    for (double v : increments) acc += v;
    return acc;
}

DivergenceTrace build_divergence_trace(const InteractionHistory& history,
                                       const ModeSet& ms, int m_star, int m,
                                       const std::vector<int>& acting_modes) {
    if (m_star < 0 || m_star >= ms.size() || m < 0 || m >= ms.size()) {
        throw InvalidArgument("divergence trace: mode index out of range");
    }
    if (acting_modes.size() != history.size()) {
        throw InvalidArgument("divergence trace: acting-mode record length mismatch");
    }
    DivergenceTrace trace;
    trace.m_star = m_star;
    trace.m = m;
    trace.acting_mode = acting_modes;
    trace.increments.reserve(history.size());
    InteractionHistory prefix;
    for (std::size_t t = 0; t < history.size(); ++t) {
        const Step& step = history[t];
        const double ls = step_log_likelihood(ms.modes[static_cast<std::size_t>(m_star)],
                                              prefix, step.action, step.observation);
        const double lm = step_log_likelihood(ms.modes[static_cast<std::size_t>(m)],
                                              prefix, step.action, step.observation);
        const double inc = ls - lm;
        if (std::isnan(inc)) {
            // Both zero: the realised observation is impossible under either
            // mode, which a recorded run can never contain.
            throw InvalidArgument("divergence trace: observation impossible under both modes");
        }
        if (std::isinf(inc)) trace.has_infinite = true;
        trace.increments.push_back(inc);
        prefix.push(step);
    }
    return trace;
}

std::vector<double> decompose_subdivergences(const DivergenceTrace& trace,
                                             int mode_count) {
    if (mode_count <= 0) throw InvalidArgument("decompose: mode count must be positive");
    std::vector<double> g(static_cast<std::size_t>(mode_count), 0.0);
    for (std::size_t t = 0; t < trace.increments.size(); ++t) {
        const int who = trace.acting_mode[t];
        if (who < 0 || who >= mode_count) {
            throw InvalidArgument("decompose: acting mode outside the mode set");
        }
        g[static_cast<std::size_t>(who)] += trace.increments[t];
    }
    return g;
}

BoundednessReport empirical_boundedness(const std::vector<RecordedRun>& runs,
                                        const ModeSet& ms, int m_star, int m,
                                        int n_monte_carlo, std::uint64_t seed,
                                        double delta) {
    if (n_monte_carlo < 2) {
        throw InvalidArgument("empirical_boundedness: need at least two replicates");
    }
    BoundednessReport report;
    report.delta = delta;
    report.entries.resize(static_cast<std::size_t>(ms.size()));
    for (int mp = 0; mp < ms.size(); ++mp) {
        report.entries[static_cast<std::size_t>(mp)].policy_mode = mp;
    }

    Rng rng = make_rng(seed);
    for (const RecordedRun& run : runs) {
        const DivergenceTrace trace =
            build_divergence_trace(run.history, ms, m_star, m, run.acting_modes);
        const std::vector<double> g = decompose_subdivergences(trace, ms.size());

        for (int mp = 0; mp < ms.size(); ++mp) {
            BoundednessEntry& entry = report.entries[static_cast<std::size_t>(mp)];
            int t_size = 0;
            for (int who : run.acting_modes) {
                if (who == mp) ++t_size;
            }
            if (t_size == 0) continue;
            entry.sample_count += t_size;
            entry.realized += g[static_cast<std::size_t>(mp)];

            // Replicate the sub-divergence sum with the T steps resampled:
            // action from mode mp's policy, observation from m_star's
            // hypothesis; all other steps keep their recorded symbols.
            double acc = 0.0, acc2 = 0.0;
            for (int rep = 0; rep < n_monte_carlo; ++rep) {
                InteractionHistory prefix;
                double total = 0.0;
                for (std::size_t t = 0; t < run.history.size(); ++t) {
                    Step step = run.history[t];
                    if (run.acting_modes[t] == mp) {
                        std::vector<double> pa =
                            ms.modes[static_cast<std::size_t>(mp)].policy(prefix);
                        validate_distribution(pa, "boundedness policy");
                        step.action = sample_from_distribution(pa, rng);
                        std::vector<double> po = ms.modes[static_cast<std::size_t>(m_star)]
                                                     .hypothesis(prefix, step.action);
                        validate_distribution(po, "boundedness hypothesis");
                        step.observation = sample_from_distribution(po, rng);
                        total += step_log_likelihood(
                                     ms.modes[static_cast<std::size_t>(m_star)], prefix,
                                     step.action, step.observation) -
                                 step_log_likelihood(ms.modes[static_cast<std::size_t>(m)],
                                                     prefix, step.action, step.observation);
                    }
                    prefix.push(step);
                }
                acc += total;
                acc2 += total * total;
            }
            const double mean = acc / n_monte_carlo;
            const double var =
                std::max(0.0, (acc2 - n_monte_carlo * mean * mean) / (n_monte_carlo - 1));
            entry.estimate_mean += mean;
            entry.estimate_stderr = std::hypot(entry.estimate_stderr,
                                               std::sqrt(var / n_monte_carlo));
            entry.max_abs_deviation = std::max(
                entry.max_abs_deviation, std::abs(g[static_cast<std::size_t>(mp)] - mean));
        }
    }
    for (BoundednessEntry& entry : report.entries) {
        entry.insufficient = entry.sample_count == 0;
    }
    return report;
}

PosteriorFloorReport posterior_floor_monitor(const std::vector<ModePosterior>& series,
                                             int m_star, double lambda) {
    if (series.empty()) throw InvalidArgument("posterior_floor_monitor: empty series");
    if (!(lambda > 0.0 && lambda <= 1.0)) {
        throw InvalidArgument("posterior_floor_monitor: lambda must lie in (0,1]");
    }
    PosteriorFloorReport report;
    report.floor = lambda / series.front().size();
    for (const ModePosterior& post : series) {
        report.min_posterior = std::min(report.min_posterior, post.probability(m_star));
    }
    report.violated = report.min_posterior < report.floor;
    return report;
}

std::vector<double> convergence_monitor(const RecordedRun& run, const ModeSet& ms,
                                        int m_star) {
    if (m_star < 0 || m_star >= ms.size()) {
        throw InvalidArgument("convergence_monitor: mode index out of range");
    }
    if (run.posteriors.size() != run.history.size() + 1) {
        throw InvalidArgument("convergence_monitor: posterior series length mismatch");
    }
    std::vector<double> tv(run.history.size());
    InteractionHistory prefix;
    for (std::size_t t = 0; t < run.history.size(); ++t) {
        const std::vector<double> mix =
            predictive_action_distribution(run.posteriors[t], ms, prefix);
        std::vector<double> ref = ms.modes[static_cast<std::size_t>(m_star)].policy(prefix);
        validate_distribution(ref, "convergence_monitor policy");
        double s = 0.0;
        for (std::size_t a = 0; a < mix.size(); ++a) s += std::abs(mix[a] - ref[a]);
        tv[t] = 0.5 * s;
        prefix.push(run.history[t]);
    }
    return tv;
}

std::string format_divergence_csv(const RecordedRun& run, const ModeSet& ms,
                                  int m_star, int m) {
    const DivergenceTrace trace =
        build_divergence_trace(run.history, ms, m_star, m, run.acting_modes);
    const std::vector<double> d = trace.partial_sums();
    const std::vector<double> tv = convergence_monitor(run, ms, m_star);

    std::ostringstream out;
    out << "t,d";
    for (int mp = 0; mp < ms.size(); ++mp) out << ",g_mode" << mp;
    out << ",posterior_mstar,tv\n";
    std::vector<double> g(static_cast<std::size_t>(ms.size()), 0.0);
    out.precision(17);
    for (std::size_t t = 0; t < d.size(); ++t) {
        g[static_cast<std::size_t>(trace.acting_mode[t])] += trace.increments[t];
        out << (t + 1) << ',' << d[t];
        for (double v : g) out << ',' << v;
        out << ',' << run.posteriors[t + 1].probability(m_star) << ',' << tv[t] << '\n';
    }
    return out.str();
}

void write_divergence_csv(const std::string& path, const RecordedRun& run,
                          const ModeSet& ms, int m_star, int m) {
    write_text_file(path, format_divergence_csv(run, ms, m_star, m));
}

}  // namespace bcr
