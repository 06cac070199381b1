#include "core/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "core/errors.hpp"

namespace bcr {

namespace {

void check_field(const std::string& value, const char* what) {
    for (char c : value) {
        if (c == ',' || c == '\n' || c == '\r' || c == '"') {
            throw InvalidArgument(std::string(what) +
                                  " must not contain commas, quotes, or newlines");
        }
    }
    if (value.empty()) {
        throw InvalidArgument(std::string(what) + " must not be empty");
    }
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

double parse_number(const std::string& field, std::size_t line_no) {
    const char* begin = field.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end == begin || *end != '\0') {
        throw InvalidArgument("malformed number on line " + std::to_string(line_no));
    }
    return value;
}

long long parse_integer(const std::string& field, std::size_t line_no) {
    const char* begin = field.c_str();
    char* end = nullptr;
    const long long value = std::strtoll(begin, &end, 10);
    if (end == begin || *end != '\0') {
        throw InvalidArgument("malformed integer on line " + std::to_string(line_no));
    }
    return value;
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::string format_csv(const std::vector<MetricRow>& rows) {
    std::string out = kMetricsCsvHeader;
    out += '\n';
    for (const MetricRow& row : rows) {
        check_field(row.metric, "metric name");
        check_field(row.agent, "agent name");
        out += std::to_string(row.t);
        out += ',';
        out += row.metric;
        out += ',';
        out += format_double(row.mean);
        out += ',';
        out += format_double(row.stderr_mean);
        out += ',';
        out += row.agent;
        out += '\n';
    }
    return out;
}

std::vector<MetricRow> parse_csv(const std::string& text) {
    std::vector<MetricRow> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!saw_header) {
            if (line != kMetricsCsvHeader) {
                throw InvalidArgument("missing metrics header on line 1");
            }
            saw_header = true;
            continue;
        }
        if (line.empty()) {
            continue;
        }
        const std::vector<std::string> fields = split_fields(line);
        if (fields.size() != 5) {
            throw InvalidArgument("expected 5 fields on line " + std::to_string(line_no));
        }
        MetricRow row;
        row.t = parse_integer(fields[0], line_no);
        row.metric = fields[1];
        row.mean = parse_number(fields[2], line_no);
        row.stderr_mean = parse_number(fields[3], line_no);
        row.agent = fields[4];
        rows.push_back(std::move(row));
    }
    if (!saw_header) {
        throw InvalidArgument("missing metrics header on line 1");
    }
    return rows;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw IoError("write failed: " + path);
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open for reading: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        throw IoError("read failed: " + path);
    }
    return buf.str();
}

void emit_csv(const std::string& path, const std::vector<MetricRow>& rows) {
    write_text_file(path, format_csv(rows));
}

}  // namespace bcr
