#include "core/gittins.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "core/errors.hpp"

namespace bcr {

namespace {

constexpr char kMagic[8] = {'B', 'C', 'R', 'G', 'I', 'T', 'T', '1'};

inline std::size_t depth_offset(int d) {
    return static_cast<std::size_t>(d) * (static_cast<std::size_t>(d) + 1) / 2;
}

void check_params(int horizon, double discount, double tolerance) {
    if (horizon < 1) throw InvalidArgument("gittins horizon must be at least 1");
    if (!(discount >= 0.0 && discount < 1.0)) {
        throw InvalidArgument("gittins discount must lie in [0,1)");
    }
    if (!(tolerance > 0.0 && tolerance <= 0.5)) {
        throw InvalidArgument("gittins tolerance must lie in (0, 0.5]");
    }
}

// One backward pass of the retirement game at rate lambda. On return,
// w[offset(d)+s] holds the optimal excess value of playing on from (s, d-s);
// it is positive exactly when the state's index exceeds lambda.
void solve_lattice(int horizon, double discount, double lambda, std::vector<double>& w) {
    for (int d = horizon - 1; d >= 0; --d) {
        const double* next = w.data() + depth_offset(d + 1);
        double* cur = w.data() + depth_offset(d);
        const double inv = 1.0 / static_cast<double>(d + 2);
        for (int s = 0; s <= d; ++s) {
            const double p = static_cast<double>(s + 1) * inv;
            const double w0 = next[s];
            const double w1 = next[s + 1];
            const double c = p - lambda + discount * (w0 + p * (w1 - w0));
            cur[s] = c > 0.0 ? c : 0.0;
        }
    }
}

}  // namespace

GittinsTable GittinsTable::compute(int horizon, double discount, double tolerance) {
    check_params(horizon, discount, tolerance);
    const std::size_t n_states = depth_offset(horizon);
    const int levels = std::clamp(
        static_cast<int>(std::ceil(std::log2(1.0 / tolerance))), 1, 30);

    std::vector<double> lo(n_states, 0.0), hi(n_states, 1.0);
    // Full lattice of play-on values, including the all-zero truncation row at
    // depth `horizon`; reused across passes.
    std::vector<double> w(depth_offset(horizon + 1), 0.0);

    for (int level = 1; level <= levels; ++level) {
        // Bucket states by the dyadic midpoint their bisection asks for next.
        const double scale = static_cast<double>(1u << std::min(level, 30));
        const std::size_t n_buckets = static_cast<std::size_t>(scale) + 1;
        std::vector<std::vector<std::uint32_t>> buckets(n_buckets);
        for (std::size_t i = 0; i < n_states; ++i) {
            const double mid = 0.5 * (lo[i] + hi[i]);
            const std::size_t key = static_cast<std::size_t>(std::lround(mid * scale));
            buckets[key].push_back(static_cast<std::uint32_t>(i));
        }
        for (std::size_t key = 0; key < n_buckets; ++key) {
            if (buckets[key].empty()) continue;
            const double lambda = static_cast<double>(key) / scale;
            solve_lattice(horizon, discount, lambda, w);
            for (std::uint32_t i : buckets[key]) {
                (w[i] > 0.0 ? lo[i] : hi[i]) = lambda;
            }
        }
    }

    GittinsTable table;
    table.horizon_ = horizon;
    table.discount_ = discount;
    table.tolerance_ = tolerance;
    table.index_.resize(n_states);
    for (std::size_t i = 0; i < n_states; ++i) {
        table.index_[i] = 0.5 * (lo[i] + hi[i]);
    }
    return table;
}

double GittinsTable::index(int successes, int failures) const {
    if (successes < 0 || failures < 0) {
        throw InvalidArgument("gittins index: negative counts");
    }
    const int d = successes + failures;
    if (d >= horizon_) {
        throw InvalidArgument("gittins index: counts reach the table horizon (" +
                              std::to_string(d) + " >= " + std::to_string(horizon_) + ")");
    }
    return index_[depth_offset(d) + static_cast<std::size_t>(successes)];
}

void GittinsTable::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kMagic, sizeof(kMagic));
    const std::int32_t h = horizon_;
    out.write(reinterpret_cast<const char*>(&h), sizeof(h));
    out.write(reinterpret_cast<const char*>(&discount_), sizeof(discount_));
    out.write(reinterpret_cast<const char*>(&tolerance_), sizeof(tolerance_));
    out.write(reinterpret_cast<const char*>(index_.data()),
              static_cast<std::streamsize>(index_.size() * sizeof(double)));
    if (!out) throw IoError("failed writing '" + path + "'");
}

GittinsTable GittinsTable::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IoError("'" + path + "' is not a gittins table file");
    }
    std::int32_t h = 0;
    GittinsTable table;
    in.read(reinterpret_cast<char*>(&h), sizeof(h));
    in.read(reinterpret_cast<char*>(&table.discount_), sizeof(table.discount_));
    in.read(reinterpret_cast<char*>(&table.tolerance_), sizeof(table.tolerance_));
    if (!in || h < 1) throw IoError("'" + path + "': corrupt header");
    table.horizon_ = h;
    table.index_.resize(depth_offset(h));
    in.read(reinterpret_cast<char*>(table.index_.data()),
            static_cast<std::streamsize>(table.index_.size() * sizeof(double)));
    if (!in) throw IoError("'" + path + "': truncated table data");
    return table;
}

std::string GittinsTable::cache_file_name(int horizon, double discount, double tolerance) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "gittins_H%d_a%g_t%g.bin", horizon, discount, tolerance);
    return buf;
}

GittinsTable GittinsTable::load_or_compute(int horizon, double discount, double tolerance,
                                           const std::string& cache_dir) {
    check_params(horizon, discount, tolerance);
    if (cache_dir.empty()) return compute(horizon, discount, tolerance);
    namespace fs = std::filesystem;
    const fs::path dir(cache_dir);
    const fs::path file = dir / cache_file_name(horizon, discount, tolerance);
    if (fs::exists(file)) {
        GittinsTable table = load(file.string());
        if (table.horizon_ == horizon && table.discount_ == discount &&
            table.tolerance_ == tolerance) {
            return table;
        }
        // Key collision with mismatched header: fall through and rebuild.
    }
    GittinsTable table = compute(horizon, discount, tolerance);
    std::error_code ec;
    fs::create_directories(dir, ec);
    table.save(file.string());
    return table;
}

int gittins_act(const BanditStats& stats, const GittinsTable& table, Rng& rng) {
    std::vector<double> idx(static_cast<std::size_t>(stats.levers()));
    for (int j = 0; j < stats.levers(); ++j) {
        idx[static_cast<std::size_t>(j)] =
            table.index(static_cast<int>(stats.wins[static_cast<std::size_t>(j)]),
                        static_cast<int>(stats.losses[static_cast<std::size_t>(j)]));
    }
    double best = idx[0];
    for (double x : idx) best = std::max(best, x);
    int ties = 0;
    for (double x : idx) {
        if (x == best) ++ties;
    }
    std::uniform_int_distribution<int> pick(0, ties - 1);
    int k = pick(rng);
    for (std::size_t j = 0; j < idx.size(); ++j) {
        if (idx[j] == best && k-- == 0) return static_cast<int>(j);
    }
    return stats.levers() - 1;
}

}  // namespace bcr
