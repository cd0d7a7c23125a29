#include "mvkit/svg_render.hpp"

#include <cstdio>

namespace mvkit {

namespace {

// Compact deterministic float formatting (C locale, no trailing noise).
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

RenderStyle RenderStyle::defaults() {
    RenderStyle s;
    s.label_colors[CellLabel::Free] = "#dcedc8";
    s.label_colors[CellLabel::Collision] = "#e57373";
    s.label_colors[CellLabel::SerialSingular] = "#ffb74d";
    s.label_colors[CellLabel::ParallelSingular] = "#9575cd";
    s.label_colors[CellLabel::Unreachable] = "#eceff1";
    s.label_colors[CellLabel::Mixed] = "#b0bec5";
    s.aspect_palette = {"#81c784", "#4fc3f7", "#fff176", "#f48fb1",
                        "#80cbc4", "#ce93d8", "#ffcc80", "#a5d6a7"};
    return s;
}

const std::string& RenderStyle::color_for(CellLabel label) const {
    static const std::string fallback = "#000000";
    const auto it = label_colors.find(label);
    return it == label_colors.end() ? fallback : it->second;
}

std::string render_map_svg(const AspectMap& map, std::span<const ObstaclePolygon> obstacles,
                           const RenderStyle& style) {
    const Quadtree& tree = map.tree;
    const double S = style.figure_size;
    const double scale = S / tree.bounds.size;
    // SVG y grows downward; flip the vertical axis.
    auto sx = [&](double x) { return (x - tree.bounds.x0) * scale; };
    auto sy = [&](double y) { return S - (y - tree.bounds.y0) * scale; };

    std::string out;
    out.reserve(1 << 16);
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + fmt(S) +
           "\" height=\"" + fmt(S) + "\" viewBox=\"0 0 " + fmt(S) + " " + fmt(S) + "\">\n";
    out += "<!-- space=" + std::string(tree.space == SpaceKind::Workspace ? "w" : "q") +
           " mode=" + std::to_string(tree.mode.index()) +
           " det_sign=" + (tree.det_sign > 0 ? std::string("+") : std::string("-")) + " -->\n";
    out += "<rect x=\"0\" y=\"0\" width=\"" + fmt(S) + "\" height=\"" + fmt(S) +
           "\" fill=\"" + style.color_for(CellLabel::Unreachable) + "\"/>\n";

    for (const Quadtree::Leaf& leaf : tree.leaves()) {
        if (leaf.label == CellLabel::Unreachable) continue;  // background already
        std::string fill = style.color_for(leaf.label);
        if (leaf.label == CellLabel::Free && !style.aspect_palette.empty()) {
            const int ord = map.aspect_of_cell[(size_t)leaf.iy * tree.grid_dim + leaf.ix];
            if (ord >= 0)
                fill = style.aspect_palette[(size_t)ord % style.aspect_palette.size()];
        }
        const double x = sx(tree.bounds.x0 + leaf.ix * tree.min_cell);
        const double y = sy(tree.bounds.y0 + (leaf.iy + leaf.span) * tree.min_cell);
        const double w = leaf.span * tree.min_cell * scale;
        out += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(w) +
               "\" height=\"" + fmt(w) + "\" fill=\"" + fill + "\"/>\n";
    }

    if (tree.space == SpaceKind::Workspace) {
        for (const ObstaclePolygon& obst : obstacles) {
            std::string pts;
            for (const Point2& v : obst.vertices) {
                if (!pts.empty()) pts += " ";
                pts += fmt(sx(v.x)) + "," + fmt(sy(v.y));
            }
            out += "<polygon points=\"" + pts + "\" fill=\"" + style.obstacle_fill +
                   "\" stroke=\"" + style.obstacle_stroke + "\" stroke-width=\"" +
                   fmt(style.stroke_width) + "\"/>\n";
        }
    }

    out += "<rect x=\"0\" y=\"0\" width=\"" + fmt(S) + "\" height=\"" + fmt(S) +
           "\" fill=\"none\" stroke=\"#263238\" stroke-width=\"" + fmt(style.stroke_width) +
           "\"/>\n";
    out += "</svg>\n";
    return out;
}

}  // namespace mvkit
