#include "core/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "core/csv.hpp"
#include "core/errors.hpp"

namespace bcr {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string escape_xml(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c; break;
        }
    }
    return out;
}

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void include(double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void finalize() {
        if (!(lo <= hi)) {  // no finite samples at all
            lo = 0.0;
            hi = 1.0;
        }
        if (lo == hi) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
};

}  // namespace

std::string render_svg_plot(const std::vector<PlotSeries>& series,
                            const PlotOptions& options) {
    if (options.width < 200 || options.height < 150) {
        throw InvalidArgument("plot size too small");
    }
    for (const PlotSeries& s : series) {
        if (s.x.size() != s.y.size()) {
            throw InvalidArgument("series x and y lengths differ: " + s.label);
        }
    }

    const double margin_left = 70.0;
    const double margin_right = 30.0;
    const double margin_top = 40.0;
    const double margin_bottom = 55.0;
    const double plot_w = options.width - margin_left - margin_right;
    const double plot_h = options.height - margin_top - margin_bottom;

    Range xr;
    Range yr;
    for (const PlotSeries& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
                xr.include(s.x[i]);
                yr.include(s.y[i]);
            }
        }
    }
    xr.finalize();
    yr.finalize();

    const auto px = [&](double x) {
        return margin_left + (x - xr.lo) / (xr.hi - xr.lo) * plot_w;
    };
    const auto py = [&](double y) {
        return margin_top + (yr.hi - y) / (yr.hi - yr.lo) * plot_h;
    };

    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           std::to_string(options.width) + "\" height=\"" +
           std::to_string(options.height) + "\" viewBox=\"0 0 " +
           std::to_string(options.width) + " " + std::to_string(options.height) +
           "\">\n";
    out += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(options.width) +
           "\" height=\"" + std::to_string(options.height) + "\" fill=\"white\"/>\n";
    if (!options.title.empty()) {
        out += "<text x=\"" + num(options.width / 2.0) +
               "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"16\">" +
               escape_xml(options.title) + "</text>\n";
    }

    // Axes frame.
    out += "<rect x=\"" + num(margin_left) + "\" y=\"" + num(margin_top) +
           "\" width=\"" + num(plot_w) + "\" height=\"" + num(plot_h) +
           "\" fill=\"none\" stroke=\"black\"/>\n";

    const int ticks = 5;
    for (int i = 0; i <= ticks; ++i) {
        const double frac = static_cast<double>(i) / ticks;
        const double xv = xr.lo + frac * (xr.hi - xr.lo);
        const double yv = yr.lo + frac * (yr.hi - yr.lo);
        const double xp = px(xv);
        const double yp = py(yv);
        out += "<line x1=\"" + num(xp) + "\" y1=\"" + num(margin_top + plot_h) +
               "\" x2=\"" + num(xp) + "\" y2=\"" + num(margin_top + plot_h + 5) +
               "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + num(xp) + "\" y=\"" + num(margin_top + plot_h + 20) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               num(xv) + "</text>\n";
        out += "<line x1=\"" + num(margin_left - 5) + "\" y1=\"" + num(yp) +
               "\" x2=\"" + num(margin_left) + "\" y2=\"" + num(yp) +
               "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + num(margin_left - 8) + "\" y=\"" + num(yp + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               num(yv) + "</text>\n";
    }
    if (!options.x_label.empty()) {
        out += "<text x=\"" + num(margin_left + plot_w / 2.0) + "\" y=\"" +
               num(options.height - 12.0) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
               escape_xml(options.x_label) + "</text>\n";
    }
    if (!options.y_label.empty()) {
        out += "<text x=\"18\" y=\"" + num(margin_top + plot_h / 2.0) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
               "transform=\"rotate(-90 18 " +
               num(margin_top + plot_h / 2.0) + ")\">" +
               escape_xml(options.y_label) + "</text>\n";
    }

    int color_idx = 0;
    for (const PlotSeries& s : series) {
        const char* color = kPalette[color_idx % kPaletteSize];
        std::string points;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                continue;
            }
            if (!points.empty()) {
                points += ' ';
            }
            points += num(px(s.x[i]));
            points += ',';
            points += num(py(s.y[i]));
        }
        if (!points.empty()) {
            out += "<polyline fill=\"none\" stroke=\"";
            out += color;
            out += "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
        }
        // Legend entry.
        const double ly = margin_top + 14.0 + 18.0 * color_idx;
        const double lx = margin_left + plot_w - 150.0;
        out += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" +
               num(lx + 24.0) + "\" y2=\"" + num(ly) + "\" stroke=\"";
        out += color;
        out += "\" stroke-width=\"2\"/>\n";
        out += "<text x=\"" + num(lx + 30.0) + "\" y=\"" + num(ly + 4.0) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" +
               escape_xml(s.label) + "</text>\n";
        ++color_idx;
    }

    out += "</svg>\n";
    return out;
}

void write_svg_plot(const std::string& path, const std::vector<PlotSeries>& series,
                    const PlotOptions& options) {
    write_text_file(path, render_svg_plot(series, options));
}

}  // namespace bcr
