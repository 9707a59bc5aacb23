#include "dualclass/heatmap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dualclass {

namespace {

constexpr double kMarginLeft = 64.0;
constexpr double kMarginRight = 84.0;
constexpr double kMarginTop = 32.0;
constexpr double kMarginBottom = 44.0;
constexpr int kColorLevels = 64;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s = buf;
    if (s == "-0.00") {
        s = "0.00";
    }
    return s;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

// Viridis control points.
std::string colour(double value) {
    static constexpr std::array<std::array<double, 3>, 5> stops = {{
        {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37},
    }};
    const double x = std::clamp(value, 0.0, 1.0) * (stops.size() - 1);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(x), stops.size() - 2);
    const double f = x - static_cast<double>(i);
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                  static_cast<int>(std::lround(stops[i][0] + f * (stops[i + 1][0] - stops[i][0]))),
                  static_cast<int>(std::lround(stops[i][1] + f * (stops[i + 1][1] - stops[i][1]))),
                  static_cast<int>(std::lround(stops[i][2] + f * (stops[i + 1][2] - stops[i][2]))));
    return buf;
}

int level(double rho2) {
    return std::clamp(static_cast<int>(std::floor(rho2 * kColorLevels)), 0, kColorLevels - 1);
}

struct Frame {
    double left;
    double top;
    double width;
    double height;
    std::size_t n;
    std::size_t rows;
    double log_p0;
    double dj;

    double x(double t) const { return left + t * width / static_cast<double>(n); }
    double row_height() const { return height / static_cast<double>(rows); }
    double y_row(double j) const { return top + j * row_height(); }
    double y_period(double period) const {
        if (!(period > 0.0)) {
            return top;
        }
        const double j = (std::log2(period) - log_p0) / dj + 0.5;
        return std::clamp(top + j * row_height(), top, top + height);
    }
};

}  // namespace

std::string render_heatmap_svg(const CoherenceField& field, const HeatmapOptions& options) {
    const std::size_t rows = field.rho2.rows();
    const std::size_t n = field.rho2.cols();
    if (rows == 0 || n == 0 || field.coi.size() != n || field.grid.size() != rows) {
        throw std::invalid_argument("render_heatmap: malformed coherence field");
    }
    for (double v : field.rho2.values()) {
        if (!std::isfinite(v)) {
            throw std::domain_error("render_heatmap: non-finite rho2");
        }
    }
    const bool have_mask = field.significant.same_shape(field.rho2);
    const Frame frame{kMarginLeft,
                      kMarginTop,
                      options.width - kMarginLeft - kMarginRight,
                      options.height - kMarginTop - kMarginBottom,
                      n,
                      rows,
                      std::log2(field.grid.periods().front()),
                      field.grid.dj()};

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(options.width) << "\" height=\""
        << num(options.height) << "\" viewBox=\"0 0 " << num(options.width) << ' ' << num(options.height)
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg << "<defs><marker id=\"arrowhead\" viewBox=\"0 0 10 10\" refX=\"8\" refY=\"5\" markerWidth=\"4\" "
           "markerHeight=\"4\" orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"#000000\"/></marker>"
           "<clipPath id=\"plot\"><rect x=\""
        << num(frame.left) << "\" y=\"" << num(frame.top) << "\" width=\"" << num(frame.width) << "\" height=\""
        << num(frame.height) << "\"/></clipPath></defs>\n";
    if (!options.title.empty()) {
        svg << "<text class=\"title\" x=\"" << num(frame.left) << "\" y=\"" << num(frame.top - 12)
            << "\" font-size=\"13\">" << escape(options.title) << "</text>\n";
    }

    // Heatmap: one rect per run of equal colour level along each scale row.
    svg << "<g class=\"heatmap\" shape-rendering=\"crispEdges\">\n";
    for (std::size_t j = 0; j < rows; ++j) {
        const auto row = field.rho2.row(j);
        std::size_t start = 0;
        while (start < n) {
            const int lvl = level(row[start]);
            std::size_t end = start + 1;
            while (end < n && level(row[end]) == lvl) {
                ++end;
            }
            svg << "<rect x=\"" << num(frame.x(static_cast<double>(start))) << "\" y=\""
                << num(frame.y_row(static_cast<double>(j))) << "\" width=\""
                << num(frame.x(static_cast<double>(end)) - frame.x(static_cast<double>(start))) << "\" height=\""
                << num(frame.row_height()) << "\" fill=\"" << colour((lvl + 0.5) / kColorLevels) << "\"/>\n";
            start = end;
        }
    }
    svg << "</g>\n";

    // Significance outline along cell edges separating significant cells
    // from non-significant cells or the plot border.
    if (have_mask) {
        std::ostringstream d;
        auto sig = [&](long j, long t) {
            return j >= 0 && t >= 0 && j < static_cast<long>(rows) && t < static_cast<long>(n) &&
                   field.significant(static_cast<std::size_t>(j), static_cast<std::size_t>(t)) != 0;
        };
        for (long j = 0; j < static_cast<long>(rows); ++j) {
            for (long t = 0; t < static_cast<long>(n); ++t) {
                if (!sig(j, t)) {
                    continue;
                }
                const double x0 = frame.x(static_cast<double>(t));
                const double x1 = frame.x(static_cast<double>(t + 1));
                const double y0 = frame.y_row(static_cast<double>(j));
                const double y1 = frame.y_row(static_cast<double>(j + 1));
                if (!sig(j - 1, t)) d << 'M' << num(x0) << ',' << num(y0) << 'H' << num(x1);
                if (!sig(j + 1, t)) d << 'M' << num(x0) << ',' << num(y1) << 'H' << num(x1);
                if (!sig(j, t - 1)) d << 'M' << num(x0) << ',' << num(y0) << 'V' << num(y1);
                if (!sig(j, t + 1)) d << 'M' << num(x1) << ',' << num(y0) << 'V' << num(y1);
            }
        }
        const std::string path = d.str();
        if (!path.empty()) {
            svg << "<path class=\"significance\" d=\"" << path
                << "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
        }
    }

    // Cone of influence: shade everything below the COI period curve.
    {
        std::ostringstream d;
        const double bottom = frame.top + frame.height;
        d << 'M' << num(frame.x(0.0)) << ',' << num(bottom);
        for (std::size_t t = 0; t < n; ++t) {
            d << 'L' << num(frame.x(static_cast<double>(t) + 0.5)) << ',' << num(frame.y_period(field.coi[t]));
        }
        d << 'L' << num(frame.x(static_cast<double>(n))) << ',' << num(bottom) << 'Z';
        svg << "<path class=\"coi\" d=\"" << d.str()
            << "\" fill=\"#ffffff\" fill-opacity=\"0.45\" stroke=\"#ffffff\" stroke-width=\"1\" clip-path=\"url(#plot)\"/>\n";
    }

    // Phase arrows: one candidate per block, drawn only where significant.
    if (have_mask && field.phase.same_shape(field.rho2)) {
        const std::size_t tb = std::max<std::size_t>(1, options.arrow_time_block);
        const std::size_t sb = std::max<std::size_t>(1, options.arrow_scale_block);
        const double cell_w = frame.width / static_cast<double>(n);
        const double length = std::max(4.0, 0.45 * std::min(cell_w * static_cast<double>(tb),
                                                            frame.row_height() * static_cast<double>(sb)));
        const bool have_indeterminate = field.phase_indeterminate.same_shape(field.rho2);
        svg << "<g class=\"phase-arrows\" stroke=\"#000000\" stroke-width=\"1.2\">\n";
        for (std::size_t j0 = 0; j0 < rows; j0 += sb) {
            for (std::size_t t0 = 0; t0 < n; t0 += tb) {
                const std::size_t j = std::min(rows - 1, j0 + sb / 2);
                const std::size_t t = std::min(n - 1, t0 + tb / 2);
                if (field.significant(j, t) == 0 || (have_indeterminate && field.phase_indeterminate(j, t) != 0)) {
                    continue;
                }
                const double theta = field.phase(j, t);
                const double cx = frame.x(static_cast<double>(t) + 0.5);
                const double cy = frame.y_row(static_cast<double>(j) + 0.5);
                // SVG y grows downward, so north (+pi/2) is -y.
                const double dx = 0.5 * length * std::cos(theta);
                const double dy = -0.5 * length * std::sin(theta);
                svg << "<line class=\"phase-arrow\" data-theta=\"" << num(theta) << "\" x1=\"" << num(cx - dx)
                    << "\" y1=\"" << num(cy - dy) << "\" x2=\"" << num(cx + dx) << "\" y2=\"" << num(cy + dy)
                    << "\" marker-end=\"url(#arrowhead)\"/>\n";
            }
        }
        svg << "</g>\n";
    }

    // Axes.
    svg << "<g class=\"axes\" stroke=\"#000000\" fill=\"none\"><rect x=\"" << num(frame.left) << "\" y=\""
        << num(frame.top) << "\" width=\"" << num(frame.width) << "\" height=\"" << num(frame.height)
        << "\"/></g>\n";
    svg << "<g class=\"y-axis\" text-anchor=\"end\">\n";
    const double p_lo = field.grid.periods().front();
    const double p_hi = field.grid.periods().back();
    for (double p = std::exp2(std::ceil(std::log2(p_lo))); p <= p_hi; p *= 2.0) {
        const double y = frame.y_period(p);
        svg << "<text x=\"" << num(frame.left - 6) << "\" y=\"" << num(y + 4) << "\">" << std::lround(p) << "</text>\n";
    }
    svg << "<text x=\"" << num(16) << "\" y=\"" << num(frame.top + frame.height / 2)
        << "\" transform=\"rotate(-90 16 " << num(frame.top + frame.height / 2)
        << ")\" text-anchor=\"middle\">Period (days)</text>\n</g>\n";
    svg << "<g class=\"x-axis\" text-anchor=\"middle\">\n";
    const std::size_t ticks = 6;
    for (std::size_t k = 0; k <= ticks; ++k) {
        const std::size_t t = std::min(n - 1, k * (n - 1) / ticks);
        const std::string label = options.dates.size() == n ? format_date(options.dates[t]) : std::to_string(t);
        svg << "<text x=\"" << num(frame.x(static_cast<double>(t) + 0.5)) << "\" y=\""
            << num(frame.top + frame.height + 16) << "\">" << escape(label) << "</text>\n";
    }
    svg << "</g>\n";

    // Colour bar.
    const double bar_x = frame.left + frame.width + 18;
    svg << "<g class=\"colorbar\">\n";
    for (int k = 0; k < kColorLevels; ++k) {
        const double y = frame.top + frame.height * (1.0 - static_cast<double>(k + 1) / kColorLevels);
        svg << "<rect x=\"" << num(bar_x) << "\" y=\"" << num(y) << "\" width=\"14\" height=\""
            << num(frame.height / kColorLevels + 0.5) << "\" fill=\"" << colour((k + 0.5) / kColorLevels) << "\"/>\n";
    }
    for (int k = 0; k <= 4; ++k) {
        const double v = k / 4.0;
        svg << "<text x=\"" << num(bar_x + 20) << "\" y=\"" << num(frame.top + frame.height * (1.0 - v) + 4) << "\">"
            << num(v) << "</text>\n";
    }
    svg << "</g>\n</svg>\n";
    return svg.str();
}

void render_heatmap(const CoherenceField& field, const std::string& path, const HeatmapOptions& options) {
    const std::string text = render_heatmap_svg(field, options);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("render_heatmap: cannot open '" + path + "' for writing");
    }
    out << text;
    if (!out) {
        throw std::runtime_error("render_heatmap: write failed for '" + path + "'");
    }
}

}  // namespace dualclass
