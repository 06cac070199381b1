#pragma once

#include <string>
#include <vector>

namespace bcr {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotOptions {
    std::string title;
    std::string x_label;
    std::string y_label;
    int width = 960;
    int height = 540;
};

// Render line series into a standalone SVG document: axes with tick labels,
// one polyline per series, and a legend. Non-finite points are skipped.
std::string render_svg_plot(const std::vector<PlotSeries>& series,
                            const PlotOptions& options);

void write_svg_plot(const std::string& path, const std::vector<PlotSeries>& series,
                    const PlotOptions& options);

}  // namespace bcr
