#include "dtsst/plot.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dtsst {

namespace {

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

std::pair<double, double> padded_range(double lo, double hi) {
    if (!(hi > lo)) {
        return {lo - 1.0, hi + 1.0};
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

} // namespace

std::string palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return colors[i % std::size(colors)];
}

std::string svg_panels(const std::vector<Panel>& panels, int width, int panel_height) {
    const int margin_left = 50;
    const int margin_right = 140;
    const int title_h = 18;
    const int height = static_cast<int>(panels.size()) * (panel_height + title_h) + 10;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    const double plot_w = width - margin_left - margin_right;
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const auto& panel = panels[p];
        const double top = static_cast<double>(p) * (panel_height + title_h) + title_h;
        double lo = INFINITY;
        double hi = -INFINITY;
        std::size_t longest = 1;
        for (const auto& t : panel.traces) {
            for (double v : t.values) {
                if (std::isfinite(v)) {
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
            }
            longest = std::max(longest, t.values.size());
        }
        if (!std::isfinite(lo)) {
            lo = 0.0;
            hi = 0.0;
        }
        const auto [ylo, yhi] = padded_range(lo, hi);
        os << "<text x=\"" << margin_left << "\" y=\"" << num(top - 5) << "\" font-weight=\"bold\">"
           << escape(panel.title) << "</text>\n";
        os << "<rect x=\"" << margin_left << "\" y=\"" << num(top) << "\" width=\"" << num(plot_w)
           << "\" height=\"" << panel_height << "\" fill=\"none\" stroke=\"#999\"/>\n";
        os << "<text x=\"" << margin_left - 4 << "\" y=\"" << num(top + 10) << "\" text-anchor=\"end\">"
           << num(yhi) << "</text>\n";
        os << "<text x=\"" << margin_left - 4 << "\" y=\"" << num(top + panel_height) << "\" text-anchor=\"end\">"
           << num(ylo) << "</text>\n";
        const double xscale = longest > 1 ? plot_w / static_cast<double>(longest - 1) : 0.0;
        for (std::size_t k = 0; k < panel.traces.size(); ++k) {
            const auto& t = panel.traces[k];
            os << "<polyline fill=\"none\" stroke=\"" << t.color << "\" stroke-width=\"1.2\" points=\"";
            for (std::size_t i = 0; i < t.values.size(); ++i) {
                if (!std::isfinite(t.values[i])) {
                    continue;
                }
                const double x = margin_left + xscale * static_cast<double>(i);
                const double y = top + panel_height * (yhi - t.values[i]) / (yhi - ylo);
                os << num(x) << ',' << num(y) << ' ';
            }
            os << "\"/>\n";
            const double ly = top + 14.0 * static_cast<double>(k + 1);
            os << "<line x1=\"" << num(margin_left + plot_w + 8) << "\" x2=\"" << num(margin_left + plot_w + 24)
               << "\" y1=\"" << num(ly - 4) << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << t.color
               << "\" stroke-width=\"2\"/>\n";
            os << "<text x=\"" << num(margin_left + plot_w + 28) << "\" y=\"" << num(ly) << "\">" << escape(t.label)
               << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

std::string svg_scatter(const std::string& title, const std::vector<ScatterGroup>& groups, int size) {
    const int margin = 40;
    const int legend = 130;
    double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
    for (const auto& g : groups) {
        for (const auto& p : g.points) {
            xlo = std::min(xlo, p[0]);
            xhi = std::max(xhi, p[0]);
            ylo = std::min(ylo, p[1]);
            yhi = std::max(yhi, p[1]);
        }
    }
    if (!std::isfinite(xlo)) {
        xlo = xhi = ylo = yhi = 0.0;
    }
    const auto [x0, x1] = padded_range(xlo, xhi);
    const auto [y0, y1] = padded_range(ylo, yhi);
    const double w = size - 2 * margin;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + legend << "\" height=\"" << size
       << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << margin << "\" y=\"" << margin - 12 << "\" font-weight=\"bold\">" << escape(title)
       << "</text>\n";
    os << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << num(w) << "\" height=\"" << num(w)
       << "\" fill=\"none\" stroke=\"#999\"/>\n";
    os << "<text x=\"" << num(margin + w / 2) << "\" y=\"" << size - 10 << "\" text-anchor=\"middle\">PC1</text>\n";
    os << "<text x=\"12\" y=\"" << num(margin + w / 2) << "\">PC2</text>\n";
    for (std::size_t k = 0; k < groups.size(); ++k) {
        const auto& g = groups[k];
        for (const auto& p : g.points) {
            const double x = margin + w * (p[0] - x0) / (x1 - x0);
            const double y = margin + w * (y1 - p[1]) / (y1 - y0);
            os << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"3\" fill=\"" << g.color
               << "\" fill-opacity=\"0.75\"/>\n";
        }
        const double ly = margin + 14.0 * static_cast<double>(k + 1);
        os << "<circle cx=\"" << num(size + 6) << "\" cy=\"" << num(ly - 4) << "\" r=\"4\" fill=\"" << g.color
           << "\"/>\n";
        os << "<text x=\"" << num(size + 16) << "\" y=\"" << num(ly) << "\">" << escape(g.label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace dtsst
