#ifndef MVKIT_DECOMPOSITION_HPP
#define MVKIT_DECOMPOSITION_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvkit/collision.hpp"
#include "mvkit/geometry.hpp"
#include "mvkit/kinematics.hpp"

namespace mvkit {

enum class CellLabel : uint8_t {
    Free = 0,
    Collision = 1,
    SerialSingular = 2,
    ParallelSingular = 3,
    Unreachable = 4,
    Mixed = 5,  ///< transient during construction; never a leaf of a finished tree
};

const char* cell_label_name(CellLabel label);
std::optional<CellLabel> cell_label_from_name(const std::string& name);

enum class SpaceKind : uint8_t { Workspace = 0, JointSpace = 1 };

/// Axis-aligned square region [x0, x0+size] x [y0, y0+size].
struct SquareBounds {
    double x0 = 0;
    double y0 = 0;
    double size = 0;

    bool contains(const Point2& p) const {
        return p.x >= x0 && p.x <= x0 + size && p.y >= y0 && p.y <= y0 + size;
    }
};

/// Default workspace square: centered on the origin with half-side
/// max(L1+L3, L2+L4) + 1, which covers the reachable annuli intersection for
/// anchors on the x axis.
SquareBounds default_workspace_bounds(const MechanismGeometry& g);

/// The joint-space torus chart [0, 2*pi) x [0, 2*pi).
SquareBounds joint_space_bounds();

// ---------------------------------------------------------------------------
// Pointwise classification
// ---------------------------------------------------------------------------

/// Outcome of classifying a single point of W or Q for one working mode.
/// det_sign partitions FREE workspace points into the two assembly branches.
struct PointClass {
    CellLabel label = CellLabel::Unreachable;
    int det_sign = 0;
    double det_a = 0.0;
    double b11 = 0.0;
    double b22 = 0.0;
    bool branch_exists = false;
    std::array<bool, 2> leg_reachable{false, false};  // workspace classification only
    bool fk_solvable = false;                         // joint-space classification only
};

PointClass classify_point_w(const MechanismGeometry& g, const Point2& p, const WorkingMode& mode,
                            std::span<const ObstaclePolygon> obstacles);

PointClass classify_point_q(const MechanismGeometry& g, const JointVector& q,
                            const WorkingMode& mode, int det_sign,
                            std::span<const ObstaclePolygon> obstacles);

// ---------------------------------------------------------------------------
// Quadtree
// ---------------------------------------------------------------------------

struct QuadNode {
    std::array<int32_t, 4> child{-1, -1, -1, -1};  // SW, SE, NW, NE
    CellLabel label = CellLabel::Mixed;

    bool is_leaf() const { return child[0] < 0; }
};

/// Adaptive decomposition of a square region of W or Q. Leaves tile the
/// bounds exactly; `raster` caches the leaf label of every minimum-size cell
/// (row-major, grid_dim^2) for neighbor and component queries.
struct Quadtree {
    SpaceKind space = SpaceKind::Workspace;
    SquareBounds bounds;
    WorkingMode mode;
    int det_sign = +1;
    double min_cell = 0;
    int grid_dim = 0;
    int32_t root = -1;
    std::vector<QuadNode> nodes;
    std::vector<CellLabel> raster;

    bool torus() const { return space == SpaceKind::JointSpace; }
    double cell_area() const { return min_cell * min_cell; }
    CellLabel cell(int ix, int iy) const { return raster[size_t(iy) * grid_dim + ix]; }

    /// Minimum-size cell containing the point, or nullopt outside the bounds.
    /// Joint-space coordinates are wrapped onto the torus chart first.
    std::optional<std::pair<int, int>> locate_cell(Point2 p) const;

    Point2 cell_center(int ix, int iy) const {
        return {bounds.x0 + (ix + 0.5) * min_cell, bounds.y0 + (iy + 0.5) * min_cell};
    }

    struct Leaf {
        int32_t node = -1;
        int ix = 0, iy = 0;  // origin in min-cell units
        int span = 0;        // side length in min-cell units
        CellLabel label = CellLabel::Mixed;
    };
    std::vector<Leaf> leaves() const;

    /// Repaints `raster` from the node structure (used after deserializing).
    void rebuild_raster();

    /// Structural equality node by node (labels, topology, metadata).
    bool same_structure(const Quadtree& other) const;
};

struct BuildParams {
    std::optional<SquareBounds> bounds;  ///< default: per-space bounds
    double min_cell = 0;                 ///< <= 0 selects size/256
    int samples_per_cell = 9;
};

/// Classifies every minimum cell from its center, corners and stratified
/// interior samples, applies one enrichment pass (boundary-adjacent FREE
/// cells re-sampled at 4x density and demoted on any non-FREE hit), then
/// merges uniform quads into leaves. Deterministic: no randomness, fixed
/// sample layout.
Quadtree build_quadtree(const MechanismGeometry& g, SpaceKind space, const WorkingMode& mode,
                        int det_sign, std::span<const ObstaclePolygon> obstacles,
                        const BuildParams& params);

// ---------------------------------------------------------------------------
// Free aspects
// ---------------------------------------------------------------------------

struct AspectId {
    int mode = 0;      // working-mode index 1..4
    int det_sign = 0;  // +1 | -1
    int index = 0;     // 1-based, ordered by descending area
    std::string str() const;
};

using GridCell = std::pair<uint16_t, uint16_t>;

/// A maximal edge-connected set of FREE leaves of one (mode, det sign) tree,
/// with an optional projection into the partner space.
struct FreeAspect {
    AspectId id;
    double area = 0;
    std::vector<GridCell> cells;        // constituent minimum cells
    std::vector<int32_t> leaf_nodes;    // node indices into the source tree
    // projection into the partner space (filled by project_aspect)
    SquareBounds partner_bounds;
    double partner_cell = 0;
    int partner_dim = 0;
    std::vector<GridCell> partner_cells;
};

/// Connected components of FREE leaves, sorted by descending area (ties by
/// lowest cell coordinate). Joint-space trees use toroidal adjacency.
std::vector<FreeAspect> extract_aspects(const Quadtree& tree);

/// Maps every aspect cell center through the branch-consistent kinematic map
/// (IK for W trees, FK for Q trees) into a partner-space grid, bridging the
/// images of adjacent cells so a connected aspect projects to a connected
/// cell set.
void project_aspect(const MechanismGeometry& g, const Quadtree& tree, FreeAspect& aspect,
                    const SquareBounds& partner_bounds, double partner_cell);

/// A finished tree with its aspects and a per-cell aspect lookup.
struct AspectMap {
    Quadtree tree;
    std::vector<FreeAspect> aspects;
    std::vector<int32_t> aspect_of_cell;  // ordinal into `aspects`, -1 if not FREE

    /// Ordinal of the aspect whose cell contains p, -1 otherwise.
    int aspect_ordinal_at(const Point2& p) const;
};

AspectMap build_aspect_map(const MechanismGeometry& g, SpaceKind space, const WorkingMode& mode,
                           int det_sign, std::span<const ObstaclePolygon> obstacles,
                           const BuildParams& params);

// ---------------------------------------------------------------------------
// Collision-free workspace and joint space (singularities ignored)
// ---------------------------------------------------------------------------

/// Membership map of the projection of the collision-free space: a cell is
/// Free when at least one kinematic branch at its samples is collision-free,
/// Collision when reachable but always colliding, Unreachable otherwise.
struct FreeSpaceMap {
    Quadtree tree;
    double free_area = 0;
    double blocked_area = 0;
    double reachable_area = 0;  // free + blocked
};

FreeSpaceMap free_workspace(const MechanismGeometry& g,
                            std::span<const ObstaclePolygon> obstacles,
                            const BuildParams& params);

FreeSpaceMap free_jointspace(const MechanismGeometry& g,
                             std::span<const ObstaclePolygon> obstacles,
                             const BuildParams& params);

}  // namespace mvkit

#endif  // MVKIT_DECOMPOSITION_HPP
