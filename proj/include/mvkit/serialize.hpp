#ifndef MVKIT_SERIALIZE_HPP
#define MVKIT_SERIALIZE_HPP

#include <string>

#include "mvkit/decomposition.hpp"

namespace mvkit {

/// Serializes a finished quadtree to its document form:
/// {space, bounds, mode, det_sign, min_cell, nodes: [{path, label}, ...]}
/// with leaves listed depth-first and paths written as quadrant digits 0-3.
std::string quadtree_to_json(const Quadtree& tree);

/// Parses the document form back into a tree (raster rebuilt). Throws
/// std::runtime_error on malformed documents.
Quadtree quadtree_from_json(const std::string& text);

void save_quadtree(const Quadtree& tree, const std::string& path);
Quadtree load_quadtree(const std::string& path);

/// FNV-1a content hash of everything that determines a build: geometry,
/// obstacles, decomposition parameters, space, mode and det sign. Stable
/// across runs and platforms with IEEE doubles.
std::string decomposition_cache_key(const MechanismGeometry& g,
                                    std::span<const ObstaclePolygon> obstacles,
                                    SpaceKind space, const WorkingMode& mode, int det_sign,
                                    const SquareBounds& bounds, double min_cell,
                                    int samples_per_cell);

}  // namespace mvkit

#endif  // MVKIT_SERIALIZE_HPP
