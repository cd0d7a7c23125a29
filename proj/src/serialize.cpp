#include "mvkit/serialize.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mvkit {

namespace {

using nlohmann::json;

void collect_leaves(const Quadtree& tree, int32_t node, std::string& path, json& out) {
    const QuadNode& n = tree.nodes[node];
    if (n.is_leaf()) {
        out.push_back(json{{"path", path}, {"label", cell_label_name(n.label)}});
        return;
    }
    for (int k = 0; k < 4; ++k) {
        path.push_back(char('0' + k));
        collect_leaves(tree, n.child[k], path, out);
        path.pop_back();
    }
}

}  // namespace

std::string quadtree_to_json(const Quadtree& tree) {
    json doc;
    doc["space"] = tree.space == SpaceKind::Workspace ? "w" : "q";
    doc["bounds"] = json{{"x0", tree.bounds.x0}, {"y0", tree.bounds.y0},
                         {"size", tree.bounds.size}};
    doc["mode"] = tree.mode.index();
    doc["det_sign"] = tree.det_sign;
    doc["min_cell"] = tree.min_cell;
    json nodes = json::array();
    if (tree.root >= 0) {
        std::string path;
        collect_leaves(tree, tree.root, path, nodes);
    }
    doc["nodes"] = std::move(nodes);
    return doc.dump(2) + "\n";
}

Quadtree quadtree_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("quadtree document is not valid JSON: ") +
                                 e.what());
    }
    Quadtree tree;
    try {
        const std::string space = doc.at("space").get<std::string>();
        if (space == "w") tree.space = SpaceKind::Workspace;
        else if (space == "q") tree.space = SpaceKind::JointSpace;
        else throw std::runtime_error("space must be 'w' or 'q'");
        tree.bounds.x0 = doc.at("bounds").at("x0").get<double>();
        tree.bounds.y0 = doc.at("bounds").at("y0").get<double>();
        tree.bounds.size = doc.at("bounds").at("size").get<double>();
        tree.mode = WorkingMode::from_index(doc.at("mode").get<int>());
        tree.det_sign = doc.at("det_sign").get<int>();
        tree.min_cell = doc.at("min_cell").get<double>();
        if (tree.det_sign != 1 && tree.det_sign != -1)
            throw std::runtime_error("det_sign must be +1 or -1");
        if (!(tree.min_cell > 0) || !(tree.bounds.size > 0))
            throw std::runtime_error("bounds and min_cell must be positive");

        const double ratio = tree.bounds.size / tree.min_cell;
        tree.grid_dim = (int)std::lround(ratio);
        if (tree.grid_dim < 1 || std::abs(ratio - tree.grid_dim) > 1e-9 * ratio ||
            (tree.grid_dim & (tree.grid_dim - 1)) != 0)
            throw std::runtime_error("bounds side must be a power-of-two multiple of min_cell");

        tree.nodes.clear();
        tree.nodes.push_back(QuadNode{});
        tree.root = 0;
        bool root_leaf_set = false;
        for (const json& entry : doc.at("nodes")) {
            const std::string path = entry.at("path").get<std::string>();
            const std::string label_name = entry.at("label").get<std::string>();
            const auto label = cell_label_from_name(label_name);
            if (!label) throw std::runtime_error("unknown label '" + label_name + "'");
            if (*label == CellLabel::Mixed)
                throw std::runtime_error("MIXED is not a valid leaf label");
            if ((size_t)1 << path.size() > (size_t)tree.grid_dim)
                throw std::runtime_error("leaf path deeper than the grid allows");

            int32_t at = tree.root;
            for (char c : path) {
                if (c < '0' || c > '3') throw std::runtime_error("path digits must be 0..3");
                const int k = c - '0';
                if (tree.nodes[at].child[0] < 0) {
                    if (tree.nodes[at].label != CellLabel::Mixed)
                        throw std::runtime_error("leaf path '" + path +
                                                 "' descends through another leaf");
                    for (int q = 0; q < 4; ++q) {
                        tree.nodes.push_back(QuadNode{});
                        tree.nodes[at].child[q] = (int32_t)tree.nodes.size() - 1;
                    }
                }
                at = tree.nodes[at].child[k];
            }
            if (!tree.nodes[at].is_leaf())
                throw std::runtime_error("leaf path '" + path + "' collides with a subtree");
            if (tree.nodes[at].label != CellLabel::Mixed)
                throw std::runtime_error("duplicate leaf path '" + path + "'");
            tree.nodes[at].label = *label;
            if (path.empty()) root_leaf_set = true;
        }
        if (tree.nodes.size() == 1 && !root_leaf_set)
            throw std::runtime_error("document has no nodes");

        // Every leaf slot must have received a label.
        for (const QuadNode& n : tree.nodes)
            if (n.is_leaf() && n.label == CellLabel::Mixed)
                throw std::runtime_error("document does not tile the bounds");
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("quadtree document malformed: ") + e.what());
    }
    tree.rebuild_raster();
    return tree;
}

void save_quadtree(const Quadtree& tree, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    f << quadtree_to_json(tree);
    if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

Quadtree load_quadtree(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return quadtree_from_json(ss.str());
}

namespace {

struct Fnv1a {
    uint64_t h = 1469598103934665603ull;
    void feed(const void* data, size_t n) {
        const unsigned char* b = (const unsigned char*)data;
        for (size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    }
    void feed_double(double v) { feed(&v, sizeof v); }
    void feed_int(int v) { feed(&v, sizeof v); }
    void feed_str(const std::string& s) {
        feed_int((int)s.size());
        feed(s.data(), s.size());
    }
};

}  // namespace

std::string decomposition_cache_key(const MechanismGeometry& g,
                                    std::span<const ObstaclePolygon> obstacles,
                                    SpaceKind space, const WorkingMode& mode, int det_sign,
                                    const SquareBounds& bounds, double min_cell,
                                    int samples_per_cell) {
    Fnv1a hash;
    for (double v : {g.L0, g.L1, g.L2, g.L3, g.L4, g.a1.x, g.a1.y, g.a2.x, g.a2.y,
                     g.link_radius, g.base_radius, g.platform_radius})
        hash.feed_double(v);
    hash.feed_int((int)obstacles.size());
    for (const ObstaclePolygon& o : obstacles) {
        hash.feed_str(o.id);
        hash.feed_int((int)o.vertices.size());
        for (const Point2& v : o.vertices) {
            hash.feed_double(v.x);
            hash.feed_double(v.y);
        }
    }
    hash.feed_int((int)space);
    hash.feed_int(mode.index());
    hash.feed_int(det_sign);
    hash.feed_double(bounds.x0);
    hash.feed_double(bounds.y0);
    hash.feed_double(bounds.size);
    hash.feed_double(min_cell);
    hash.feed_int(samples_per_cell);

    char buf[24];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, hash.h);
    return buf;
}

}  // namespace mvkit
