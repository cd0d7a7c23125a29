#ifndef MVKIT_SVG_RENDER_HPP
#define MVKIT_SVG_RENDER_HPP

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mvkit/decomposition.hpp"

namespace mvkit {

/// Colors and dimensions for rendered maps. Every cell label has a color.
struct RenderStyle {
    std::map<CellLabel, std::string> label_colors;
    std::vector<std::string> aspect_palette;  // tint per aspect ordinal, cycled
    double figure_size = 800.0;               // pixels per side
    double stroke_width = 1.0;
    std::string obstacle_fill = "#6d4c41";
    std::string obstacle_stroke = "#3e2723";

    static RenderStyle defaults();
    const std::string& color_for(CellLabel label) const;
};

/// Renders a finished map as an SVG 1.1 document. Cells are drawn per leaf,
/// FREE leaves tinted by their aspect, obstacles drawn on top. Output is
/// byte-for-byte deterministic for identical inputs.
std::string render_map_svg(const AspectMap& map, std::span<const ObstaclePolygon> obstacles,
                           const RenderStyle& style);

}  // namespace mvkit

#endif  // MVKIT_SVG_RENDER_HPP
