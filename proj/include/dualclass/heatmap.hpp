#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dualclass/timeseries.hpp"
#include "dualclass/wavelet.hpp"

namespace dualclass {

struct HeatmapOptions {
    double width = 960.0;
    double height = 420.0;
    /// At most one phase arrow per block of this many time steps x scales.
    std::size_t arrow_time_block = 16;
    std::size_t arrow_scale_block = 4;
    std::string title;
    /// Optional x-axis labels, one per time index.
    std::vector<Date> dates;
};

/// Time on x, log2(period) on y with short periods at the top, rho2 colour
/// map, cone of influence shaded, significant regions outlined. Phase arrows
/// are drawn only on significant cells: east for theta = 0, north for +pi/2.
std::string render_heatmap_svg(const CoherenceField& field, const HeatmapOptions& options = {});

/// Writes render_heatmap_svg to `path`; I/O failures name the path.
void render_heatmap(const CoherenceField& field, const std::string& path, const HeatmapOptions& options = {});

}  // namespace dualclass
