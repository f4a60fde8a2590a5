#pragma once

// Minimal SVG figures: stacked line panels and a 2-D scatter.

#include <array>
#include <string>
#include <vector>

#include "dtsst/series.hpp"

namespace dtsst {

struct Trace {
    std::string label;
    Series values;
    std::string color = "#1f77b4";
};

struct Panel {
    std::string title;
    std::vector<Trace> traces;
};

/// One panel per row, shared width; each panel autoscales its y range.
std::string svg_panels(const std::vector<Panel>& panels, int width = 900, int panel_height = 150);

struct ScatterGroup {
    std::string label;
    std::vector<std::array<double, 2>> points;
    std::string color;
};

std::string svg_scatter(const std::string& title, const std::vector<ScatterGroup>& groups, int size = 520);

/// A fixed qualitative palette, cycled by index.
std::string palette(std::size_t i);

} // namespace dtsst
