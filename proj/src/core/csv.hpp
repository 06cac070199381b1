#pragma once

#include <string>
#include <vector>

namespace bcr {

// One aggregated metric sample: the value of `metric` for `agent` at step t,
// averaged over runs, with the standard error of that mean.
struct MetricRow {
    long long t = 0;
    std::string metric;
    double mean = 0.0;
    double stderr_mean = 0.0;
    std::string agent;

    bool operator==(const MetricRow&) const = default;
};

inline constexpr const char* kMetricsCsvHeader = "t,metric,mean,stderr,agent";

// Render rows under the fixed header. Numbers use %.17g so parsing the
// output reproduces the doubles bit for bit.
std::string format_csv(const std::vector<MetricRow>& rows);

std::vector<MetricRow> parse_csv(const std::string& text);

void emit_csv(const std::string& path, const std::vector<MetricRow>& rows);

// Small file helpers shared by the writers.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

std::string format_double(double value);  // %.17g

}  // namespace bcr
