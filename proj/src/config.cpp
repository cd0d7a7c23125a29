#include "mvkit/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace mvkit {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path, const char* what) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError(kErrMissingFile, std::string(what) + " not found: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

json parse_json(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(kErrMalformedJson, std::string(what) + ": " + e.what());
    }
}

double number_field(const json& obj, const std::string& field, const std::string& where) {
    if (!obj.contains(field))
        throw ConfigError(kErrBadField, "missing field '" + field + "'", where + "." + field);
    const json& v = obj.at(field);
    if (!v.is_number())
        throw ConfigError(kErrBadField, "field '" + field + "' must be a number",
                          where + "." + field);
    return v.get<double>();
}

Point2 point_field(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError(kErrBadField, "expected [x, y]", where);
    const double x = v[0].get<double>();
    const double y = v[1].get<double>();
    if (!std::isfinite(x) || !std::isfinite(y))
        throw ConfigError(kErrBadField, "coordinates must be finite", where);
    return Point2(x, y);
}

}  // namespace

double snap_min_cell(double side, double requested) {
    if (!(requested > 0) || !(side > 0))
        throw ConfigError(kErrBadDecomposition, "min_cell and bounds must be positive");
    int k = 0;
    while (side / (double)(1 << k) > requested * (1.0 + 1e-9) && k < 20) ++k;
    return side / (double)(1 << k);
}

SquareBounds ProjectConfig::workspace_bounds() const {
    if (decomposition.bounds) return *decomposition.bounds;
    return default_workspace_bounds(geometry);
}

BuildParams ProjectConfig::build_params(SpaceKind space) const {
    BuildParams params;
    const SquareBounds bounds =
        space == SpaceKind::Workspace ? workspace_bounds() : joint_space_bounds();
    params.bounds = bounds;
    params.samples_per_cell = decomposition.samples_per_cell;
    const double requested =
        decomposition.min_cell > 0 ? decomposition.min_cell : bounds.size / 256.0;
    params.min_cell = snap_min_cell(bounds.size, requested);
    return params;
}

ProjectConfig parse_project_config(const std::string& text) {
    const json doc = parse_json(text, "config");
    if (!doc.is_object()) throw ConfigError(kErrBadField, "config root must be an object", "");

    ProjectConfig cfg;
    if (!doc.contains("geometry") || !doc.at("geometry").is_object())
        throw ConfigError(kErrBadField, "missing 'geometry' object", "geometry");
    const json& geo = doc.at("geometry");

    MechanismGeometry g;
    g.L0 = number_field(geo, "L0", "geometry");
    g.L1 = number_field(geo, "L1", "geometry");
    g.L2 = number_field(geo, "L2", "geometry");
    g.L3 = number_field(geo, "L3", "geometry");
    g.L4 = number_field(geo, "L4", "geometry");
    for (auto [name, value] : {std::pair<const char*, double>{"L0", g.L0},
                               {"L1", g.L1},
                               {"L2", g.L2},
                               {"L3", g.L3},
                               {"L4", g.L4}})
        if (!(value > 0) || !std::isfinite(value))
            throw ConfigError(kErrBadLength, std::string("length ") + name + " must be > 0",
                              std::string("geometry.") + name);

    g.a1 = geo.contains("a1") ? point_field(geo.at("a1"), "geometry.a1") : Point2(0, 0);
    g.a2 = geo.contains("a2") ? point_field(geo.at("a2"), "geometry.a2") : Point2(g.L0, 0);
    if (std::abs(g.a1.distance_to(g.a2) - g.L0) > 1e-9)
        throw ConfigError(kErrGeometryInconsistent, "|a2 - a1| must equal L0", "geometry.a2");

    g.link_radius = geo.contains("link_radius") ? number_field(geo, "link_radius", "geometry")
                                                : 0.1;
    g.base_radius = geo.contains("base_radius") ? number_field(geo, "base_radius", "geometry")
                                                : 0.1;
    g.platform_radius =
        geo.contains("platform_radius") ? number_field(geo, "platform_radius", "geometry") : 0.1;
    for (auto [name, value] : {std::pair<const char*, double>{"link_radius", g.link_radius},
                               {"base_radius", g.base_radius},
                               {"platform_radius", g.platform_radius}})
        if (!(value >= 0) || !std::isfinite(value))
            throw ConfigError(kErrBadRadius, std::string(name) + " must be >= 0",
                              std::string("geometry.") + name);
    cfg.geometry = g;

    if (doc.contains("obstacles")) {
        const json& arr = doc.at("obstacles");
        if (!arr.is_array())
            throw ConfigError(kErrBadField, "'obstacles' must be an array", "obstacles");
        int index = 0;
        for (const json& entry : arr) {
            const std::string where = "obstacles[" + std::to_string(index) + "]";
            if (!entry.is_object() || !entry.contains("vertices"))
                throw ConfigError(kErrBadPolygon, "obstacle needs a 'vertices' array", where);
            const std::string id = entry.contains("id")
                                       ? entry.at("id").get<std::string>()
                                       : "obstacle-" + std::to_string(index);
            std::vector<Point2> verts;
            for (const json& v : entry.at("vertices"))
                verts.push_back(point_field(v, where + ".vertices"));
            if (verts.size() < 3)
                throw ConfigError(kErrBadPolygon, "polygon needs at least 3 vertices", where);
            if (!is_simple_polygon(verts))
                throw ConfigError(kErrBadPolygon, "polygon must be simple (non-self-intersecting)",
                                  where);
            cfg.obstacles.emplace_back(std::move(verts), id);
            ++index;
        }
    }

    if (doc.contains("decomposition")) {
        const json& dec = doc.at("decomposition");
        if (!dec.is_object())
            throw ConfigError(kErrBadField, "'decomposition' must be an object", "decomposition");
        if (dec.contains("min_cell")) {
            cfg.decomposition.min_cell = number_field(dec, "min_cell", "decomposition");
            if (!(cfg.decomposition.min_cell > 0))
                throw ConfigError(kErrBadDecomposition, "min_cell must be > 0",
                                  "decomposition.min_cell");
        }
        if (dec.contains("samples_per_cell")) {
            cfg.decomposition.samples_per_cell =
                (int)number_field(dec, "samples_per_cell", "decomposition");
            if (cfg.decomposition.samples_per_cell < 5)
                throw ConfigError(kErrBadDecomposition, "samples_per_cell must be >= 5",
                                  "decomposition.samples_per_cell");
        }
        if (dec.contains("bounds")) {
            const json& b = dec.at("bounds");
            SquareBounds sb;
            sb.x0 = number_field(b, "x0", "decomposition.bounds");
            sb.y0 = number_field(b, "y0", "decomposition.bounds");
            sb.size = number_field(b, "size", "decomposition.bounds");
            if (!(sb.size > 0))
                throw ConfigError(kErrBadDecomposition, "bounds size must be > 0",
                                  "decomposition.bounds.size");
            cfg.decomposition.bounds = sb;
        }
    }

    if (doc.contains("output")) {
        if (!doc.at("output").is_string())
            throw ConfigError(kErrBadField, "'output' must be a string", "output");
        cfg.output_dir = doc.at("output").get<std::string>();
    }
    return cfg;
}

ProjectConfig load_project_config(const std::string& path) {
    return parse_project_config(read_file(path, "config file"));
}

Trajectory parse_trajectory(const std::string& text, double default_step) {
    const json doc = parse_json(text, "trajectory");
    Trajectory t;
    if (!doc.is_object() || !doc.contains("waypoints") || !doc.at("waypoints").is_array())
        throw ConfigError(kErrBadTrajectory, "trajectory needs a 'waypoints' array",
                          "waypoints");
    for (const json& v : doc.at("waypoints"))
        t.waypoints.push_back(point_field(v, "waypoints"));
    t.sampling_step =
        doc.contains("step") ? number_field(doc, "step", "trajectory") : default_step;
    if (t.sampling_step <= 0) t.sampling_step = default_step;
    try {
        t.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(kErrBadTrajectory, e.what(), "waypoints");
    }
    return t;
}

Trajectory load_trajectory(const std::string& path, double default_step) {
    return parse_trajectory(read_file(path, "trajectory file"), default_step);
}

}  // namespace mvkit
