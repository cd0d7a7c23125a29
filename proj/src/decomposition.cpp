#include "mvkit/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <stdexcept>

namespace mvkit {

const char* cell_label_name(CellLabel label) {
    switch (label) {
        case CellLabel::Free: return "FREE";
        case CellLabel::Collision: return "COLLISION";
        case CellLabel::SerialSingular: return "SERIAL_SINGULAR";
        case CellLabel::ParallelSingular: return "PARALLEL_SINGULAR";
        case CellLabel::Unreachable: return "UNREACHABLE";
        case CellLabel::Mixed: return "MIXED";
    }
    return "?";
}

std::optional<CellLabel> cell_label_from_name(const std::string& name) {
    for (CellLabel l : {CellLabel::Free, CellLabel::Collision, CellLabel::SerialSingular,
                        CellLabel::ParallelSingular, CellLabel::Unreachable, CellLabel::Mixed})
        if (name == cell_label_name(l)) return l;
    return std::nullopt;
}

SquareBounds default_workspace_bounds(const MechanismGeometry& g) {
    const double reach = std::max(g.L1 + g.L3, g.L2 + g.L4) + 1.0;
    return SquareBounds{-reach, -reach, 2.0 * reach};
}

SquareBounds joint_space_bounds() { return SquareBounds{0.0, 0.0, kTwoPi}; }

namespace {

int sign_eps(double v, double eps) {
    if (v > eps) return +1;
    if (v < -eps) return -1;
    return 0;
}

}  // namespace

PointClass classify_point_w(const MechanismGeometry& g, const Point2& p, const WorkingMode& mode,
                            std::span<const ObstaclePolygon> obstacles) {
    PointClass out;
    const IkResult ik = inverse_kinematics(g, PoseVector(p));
    out.leg_reachable = {!ik.leg_unreachable[0], !ik.leg_unreachable[1]};
    if (ik.leg_unreachable[0] || ik.leg_unreachable[1]) {
        out.label = CellLabel::Unreachable;
        return out;
    }
    if (ik.leg_degenerate[0] || ik.leg_degenerate[1]) {
        // Anchor coincides with the target: the proximal link may point
        // anywhere, and B_ii vanishes for the folded chain.
        out.label = CellLabel::SerialSingular;
        return out;
    }

    const IkBranch* pick = nullptr;
    for (const IkBranch& br : ik.branches) {
        const bool m1 = (br.s1 == 0) || (br.s1 == mode.s1);
        const bool m2 = (br.s2 == 0) || (br.s2 == mode.s2);
        if (m1 && m2) {
            pick = &br;
            break;
        }
    }
    if (pick == nullptr) {
        out.label = CellLabel::Unreachable;
        return out;
    }

    out.branch_exists = true;
    const MechanismConfiguration c{PoseVector(p), pick->q, pick->b1, pick->b2};
    const JacobianPair jp = jacobians(g, c);
    out.det_a = jp.det_a;
    out.b11 = jp.b11;
    out.b22 = jp.b22;
    out.det_sign = sign_eps(jp.det_a, g.eps_parallel());

    if (pick->serial_singular || std::abs(jp.b11) <= g.eps_serial() ||
        std::abs(jp.b22) <= g.eps_serial()) {
        out.label = CellLabel::SerialSingular;
        return out;
    }
    if (out.det_sign == 0) {
        out.label = CellLabel::ParallelSingular;
        return out;
    }
    out.label = is_collision_free(g, c, obstacles).first ? CellLabel::Free : CellLabel::Collision;
    return out;
}

PointClass classify_point_q(const MechanismGeometry& g, const JointVector& q,
                            const WorkingMode& mode, int det_sign,
                            std::span<const ObstaclePolygon> obstacles) {
    PointClass out;
    const FkResult fk = forward_kinematics(g, q);
    out.fk_solvable = (fk.status == FkResult::Status::Ok) && !fk.branches.empty();
    if (fk.status == FkResult::Status::Concentric) {
        out.label = CellLabel::ParallelSingular;  // det(A) vanishes on the whole continuum
        return out;
    }
    if (!out.fk_solvable) {
        out.label = CellLabel::Unreachable;
        return out;
    }

    const FkBranch* pick = nullptr;
    for (const FkBranch& br : fk.branches) {
        if (br.det_sign == 0) {
            // Tangent assembly: the two direct solutions meet here.
            out.det_a = br.det_a;
            out.label = CellLabel::ParallelSingular;
            return out;
        }
        if (br.det_sign == det_sign) pick = &br;
    }
    if (pick == nullptr) {
        out.label = CellLabel::Unreachable;
        return out;
    }

    out.branch_exists = true;
    const MechanismConfiguration c{PoseVector(pick->p), q, fk.b1, fk.b2};
    const JacobianPair jp = jacobians(g, c);
    out.det_a = jp.det_a;
    out.b11 = jp.b11;
    out.b22 = jp.b22;
    out.det_sign = pick->det_sign;

    if (std::abs(jp.b11) <= g.eps_serial() || std::abs(jp.b22) <= g.eps_serial()) {
        out.label = CellLabel::SerialSingular;
        return out;
    }
    const WorkingMode here(jp.b11 > 0 ? +1 : -1, jp.b22 > 0 ? +1 : -1);
    if (here != mode) {
        out.label = CellLabel::Unreachable;
        return out;
    }
    out.label = is_collision_free(g, c, obstacles).first ? CellLabel::Free : CellLabel::Collision;
    return out;
}

// ---------------------------------------------------------------------------
// Build machinery
// ---------------------------------------------------------------------------

namespace {

// Classifier shared by the per-mode trees and the free-space membership maps.
struct Sampler {
    enum class Kind { Mode, FreeSpace };

    const MechanismGeometry* g = nullptr;
    SpaceKind space = SpaceKind::Workspace;
    Kind kind = Kind::Mode;
    WorkingMode mode;
    int det_sign = +1;
    std::span<const ObstaclePolygon> obstacles;

    PointClass eval(const Point2& uv) const {
        if (kind == Kind::Mode) {
            PointClass pc = (space == SpaceKind::Workspace)
                                ? classify_point_w(*g, uv, mode, obstacles)
                                : classify_point_q(*g, JointVector(uv.x, uv.y), mode, det_sign,
                                                   obstacles);
            // The tree for (mode, sign) keeps only its own assembly branch.
            if (space == SpaceKind::Workspace && pc.label == CellLabel::Free &&
                pc.det_sign != det_sign)
                pc.label = CellLabel::Unreachable;
            return pc;
        }
        return space == SpaceKind::Workspace ? eval_free_w(uv) : eval_free_q(uv);
    }

    PointClass eval_free_w(const Point2& p) const {
        PointClass out;
        const IkResult ik = inverse_kinematics(*g, PoseVector(p));
        out.leg_reachable = {!ik.leg_unreachable[0], !ik.leg_unreachable[1]};
        if (ik.leg_unreachable[0] || ik.leg_unreachable[1]) {
            out.label = CellLabel::Unreachable;
            return out;
        }
        if (ik.branches.empty()) {
            // Degenerate (anchor == target) legs admit a continuum; probe a
            // few representative elbow directions.
            out.label = degenerate_free_w(p) ? CellLabel::Free : CellLabel::Collision;
            return out;
        }
        for (const IkBranch& br : ik.branches) {
            const MechanismConfiguration c{PoseVector(p), br.q, br.b1, br.b2};
            if (is_collision_free(*g, c, obstacles).first) {
                out.label = CellLabel::Free;
                return out;
            }
        }
        out.label = CellLabel::Collision;
        return out;
    }

    bool degenerate_free_w(const Point2& p) const {
        for (int k = 0; k < 8; ++k) {
            const double t = k * (kTwoPi / 8.0);
            const auto c = assemble(*g, PoseVector(p), JointVector(t, t));
            if (c && is_collision_free(*g, *c, obstacles).first) return true;
        }
        return false;
    }

    PointClass eval_free_q(const Point2& uv) const {
        PointClass out;
        const JointVector q(uv.x, uv.y);
        const FkResult fk = forward_kinematics(*g, q);
        out.fk_solvable = (fk.status != FkResult::Status::NoSolution);
        if (fk.status == FkResult::Status::NoSolution) {
            out.label = CellLabel::Unreachable;
            return out;
        }
        if (fk.status == FkResult::Status::Concentric) {
            // Continuum of poses on the coincident distal circles.
            for (int k = 0; k < 8; ++k) {
                const double t = k * (kTwoPi / 8.0);
                const Point2 p = fk.b1 + Point2(std::cos(t), std::sin(t)) * g->L3;
                const MechanismConfiguration c{PoseVector(p), q, fk.b1, fk.b2};
                if (is_collision_free(*g, c, obstacles).first) {
                    out.label = CellLabel::Free;
                    return out;
                }
            }
            out.label = CellLabel::Collision;
            return out;
        }
        for (const FkBranch& br : fk.branches) {
            const MechanismConfiguration c{PoseVector(br.p), q, fk.b1, fk.b2};
            if (is_collision_free(*g, c, obstacles).first) {
                out.label = CellLabel::Free;
                return out;
            }
        }
        out.label = CellLabel::Collision;
        return out;
    }
};

// Sample layout for one cell: center, four corners, then (n-5) stratified
// interior points on a fixed lattice.
void cell_sample_points(double cx, double cy, double cell, int n, std::vector<Point2>* pts) {
    pts->clear();
    pts->emplace_back(cx + 0.5 * cell, cy + 0.5 * cell);
    pts->emplace_back(cx, cy);
    pts->emplace_back(cx + cell, cy);
    pts->emplace_back(cx, cy + cell);
    pts->emplace_back(cx + cell, cy + cell);
    const int extra = n - 5;
    if (extra <= 0) return;
    const int m = (int)std::ceil(std::sqrt((double)extra));
    int emitted = 0;
    for (int j = 0; j < m && emitted < extra; ++j)
        for (int i = 0; i < m && emitted < extra; ++i, ++emitted)
            pts->emplace_back(cx + (i + 0.5) * cell / m, cy + (j + 0.5) * cell / m);
}

CellLabel combine_samples(const std::vector<PointClass>& s, const Sampler& sampler) {
    bool uniform = true;
    for (size_t i = 1; i < s.size(); ++i)
        if (s[i].label != s[0].label) {
            uniform = false;
            break;
        }
    if (uniform) return s[0].label;

    const MechanismGeometry& g = *sampler.g;
    if (sampler.kind == Sampler::Kind::FreeSpace) {
        for (const PointClass& pc : s)
            if (pc.label == CellLabel::Collision) return CellLabel::Collision;
        return CellLabel::Unreachable;
    }

    // A mixed minimum cell is conservative (never FREE); prefer the singular
    // labels when the samples show the corresponding boundary inside the cell.
    bool det_pos = false, det_neg = false, det_small = false;
    bool b_small = false;
    bool leg_cross[2] = {false, false};
    bool leg_seen_true[2] = {false, false}, leg_seen_false[2] = {false, false};
    bool fk_true = false, fk_false = false;
    bool b1_pos = false, b1_neg = false, b2_pos = false, b2_neg = false;
    for (const PointClass& pc : s) {
        if (pc.branch_exists) {
            if (pc.det_a > g.eps_parallel()) det_pos = true;
            else if (pc.det_a < -g.eps_parallel()) det_neg = true;
            else det_small = true;
            if (std::abs(pc.b11) <= g.eps_serial() || std::abs(pc.b22) <= g.eps_serial())
                b_small = true;
            (pc.b11 > 0 ? b1_pos : b1_neg) = true;
            (pc.b22 > 0 ? b2_pos : b2_neg) = true;
        }
        if (pc.label == CellLabel::ParallelSingular) det_small = true;
        if (pc.label == CellLabel::SerialSingular) b_small = true;
        for (int leg = 0; leg < 2; ++leg)
            (pc.leg_reachable[leg] ? leg_seen_true[leg] : leg_seen_false[leg]) = true;
        (pc.fk_solvable ? fk_true : fk_false) = true;
    }
    for (int leg = 0; leg < 2; ++leg)
        leg_cross[leg] = leg_seen_true[leg] && leg_seen_false[leg];

    if (sampler.space == SpaceKind::Workspace) {
        if ((det_pos && det_neg) || det_small) return CellLabel::ParallelSingular;
        if (leg_cross[0] || leg_cross[1] || b_small) return CellLabel::SerialSingular;
    } else {
        if ((fk_true && fk_false) || det_small) return CellLabel::ParallelSingular;
        if ((b1_pos && b1_neg) || (b2_pos && b2_neg) || b_small) return CellLabel::SerialSingular;
    }
    for (const PointClass& pc : s)
        if (pc.label == CellLabel::Collision) return CellLabel::Collision;

    // Fallback: most frequent non-FREE sample label, ties by enum order.
    int counts[6] = {0, 0, 0, 0, 0, 0};
    for (const PointClass& pc : s) counts[(int)pc.label]++;
    int best = -1;
    for (int l = 1; l < 6; ++l)
        if (counts[l] > 0 && (best < 0 || counts[l] > counts[best])) best = l;
    return best < 0 ? CellLabel::Unreachable : (CellLabel)best;
}

int validated_grid_dim(const SquareBounds& bounds, double min_cell) {
    if (!(bounds.size > 0.0)) throw std::invalid_argument("quadtree bounds must be non-empty");
    if (!(min_cell > 0.0)) throw std::invalid_argument("min_cell must be > 0");
    const double ratio = bounds.size / min_cell;
    const int dim = (int)std::lround(ratio);
    if (dim < 1 || std::abs(ratio - dim) > 1e-9 * ratio || (dim & (dim - 1)) != 0)
        throw std::invalid_argument(
            "bounds side must be a power-of-two multiple of min_cell");
    return dim;
}

struct FlatGrid {
    int dim = 0;
    std::vector<CellLabel> labels;
};

FlatGrid classify_flat(const Sampler& sampler, const SquareBounds& bounds, double min_cell,
                       int samples_per_cell) {
    FlatGrid grid;
    grid.dim = validated_grid_dim(bounds, min_cell);
    grid.labels.assign((size_t)grid.dim * grid.dim, CellLabel::Mixed);

    std::vector<Point2> pts;
    std::vector<PointClass> samples;
    for (int iy = 0; iy < grid.dim; ++iy) {
        for (int ix = 0; ix < grid.dim; ++ix) {
            const double cx = bounds.x0 + ix * min_cell;
            const double cy = bounds.y0 + iy * min_cell;
            cell_sample_points(cx, cy, min_cell, samples_per_cell, &pts);
            samples.clear();
            for (const Point2& p : pts) samples.push_back(sampler.eval(p));
            grid.labels[(size_t)iy * grid.dim + ix] = combine_samples(samples, sampler);
        }
    }
    return grid;
}

// One enrichment pass: every FREE cell that touches a non-FREE cell is
// re-sampled at four times the base density and demoted on any non-FREE hit.
void enrich(const Sampler& sampler, const SquareBounds& bounds, double min_cell,
            int samples_per_cell, bool torus, FlatGrid* grid) {
    const int dim = grid->dim;
    auto at = [&](int ix, int iy) -> CellLabel {
        if (torus) {
            ix = (ix % dim + dim) % dim;
            iy = (iy % dim + dim) % dim;
        } else if (ix < 0 || iy < 0 || ix >= dim || iy >= dim)
            return CellLabel::Mixed;  // outside: does not trigger enrichment
        return grid->labels[(size_t)iy * dim + ix];
    };

    std::vector<std::pair<int, int>> targets;
    for (int iy = 0; iy < dim; ++iy)
        for (int ix = 0; ix < dim; ++ix) {
            if (at(ix, iy) != CellLabel::Free) continue;
            const CellLabel n[4] = {at(ix + 1, iy), at(ix - 1, iy), at(ix, iy + 1),
                                    at(ix, iy - 1)};
            for (CellLabel l : n)
                if (l != CellLabel::Free && l != CellLabel::Mixed) {
                    targets.emplace_back(ix, iy);
                    break;
                }
        }

    const int m = (int)std::ceil(std::sqrt(4.0 * samples_per_cell));
    for (auto [ix, iy] : targets) {
        const double cx = bounds.x0 + ix * min_cell;
        const double cy = bounds.y0 + iy * min_cell;
        int hits[6] = {0, 0, 0, 0, 0, 0};
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < m; ++i) {
                const Point2 p(cx + (i + 0.5) * min_cell / m, cy + (j + 0.5) * min_cell / m);
                const PointClass pc = sampler.eval(p);
                if (pc.label != CellLabel::Free) hits[(int)pc.label]++;
            }
        int best = -1;
        for (int l = 1; l < 6; ++l)
            if (hits[l] > 0 && (best < 0 || hits[l] > hits[best])) best = l;
        if (best >= 0) grid->labels[(size_t)iy * dim + ix] = (CellLabel)best;
    }
}

// FREE components so thin they contain no interior cell (one whose four
// neighbors are all FREE) cannot be certified as regions at this resolution;
// relabel them with the surrounding boundary label, extending the
// conservative treatment of mixed minimum cells.
void prune_uncertifiable_free(bool torus, FlatGrid* grid) {
    const int dim = grid->dim;
    auto at = [&](int ix, int iy) -> CellLabel {
        if (torus) {
            ix = (ix % dim + dim) % dim;
            iy = (iy % dim + dim) % dim;
        } else if (ix < 0 || iy < 0 || ix >= dim || iy >= dim)
            return CellLabel::Unreachable;
        return grid->labels[(size_t)iy * dim + ix];
    };

    std::vector<int32_t> comp((size_t)dim * dim, -1);
    std::vector<std::vector<int>> members;
    std::vector<bool> has_interior;
    for (int start = 0; start < dim * dim; ++start) {
        if (grid->labels[start] != CellLabel::Free || comp[start] >= 0) continue;
        const int32_t id = (int32_t)members.size();
        members.emplace_back();
        has_interior.push_back(false);
        std::deque<int> queue{start};
        comp[start] = id;
        while (!queue.empty()) {
            const int k = queue.front();
            queue.pop_front();
            members[id].push_back(k);
            const int x = k % dim, y = k / dim;
            bool interior = true;
            const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
            for (int d = 0; d < 4; ++d) {
                int nx = x + dx[d], ny = y + dy[d];
                if (at(nx, ny) != CellLabel::Free) {
                    interior = false;
                    continue;
                }
                if (torus) {
                    nx = (nx + dim) % dim;
                    ny = (ny + dim) % dim;
                }
                const int nk = ny * dim + nx;
                if (comp[nk] < 0) {
                    comp[nk] = id;
                    queue.push_back(nk);
                }
            }
            if (interior) has_interior[id] = true;
        }
    }

    for (size_t id = 0; id < members.size(); ++id) {
        if (has_interior[id]) continue;
        // Most frequent non-FREE label around the component, ties by enum.
        int counts[6] = {0, 0, 0, 0, 0, 0};
        for (int k : members[id]) {
            const int x = k % dim, y = k / dim;
            const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
            for (int d = 0; d < 4; ++d) {
                const CellLabel l = at(x + dx[d], y + dy[d]);
                if (l != CellLabel::Free && l != CellLabel::Mixed) counts[(int)l]++;
            }
        }
        int best = (int)CellLabel::Unreachable;
        int best_count = -1;
        for (int l = 1; l < 6; ++l)
            if (counts[l] > best_count) {
                best = l;
                best_count = counts[l];
            }
        for (int k : members[id]) grid->labels[k] = (CellLabel)best;
    }
}

// Merges the classified grid into a quadtree, collapsing uniform quads.
struct MergeResult {
    bool uniform = false;
    CellLabel label = CellLabel::Mixed;
    int32_t node = -1;
};

MergeResult merge_region(const FlatGrid& grid, int ix, int iy, int span,
                         std::vector<QuadNode>* nodes) {
    if (span == 1) {
        return {true, grid.labels[(size_t)iy * grid.dim + ix], -1};
    }
    const int h = span / 2;
    const MergeResult sub[4] = {
        merge_region(grid, ix, iy, h, nodes),
        merge_region(grid, ix + h, iy, h, nodes),
        merge_region(grid, ix, iy + h, h, nodes),
        merge_region(grid, ix + h, iy + h, h, nodes),
    };
    const bool all_uniform = sub[0].uniform && sub[1].uniform && sub[2].uniform &&
                             sub[3].uniform && sub[0].label == sub[1].label &&
                             sub[0].label == sub[2].label && sub[0].label == sub[3].label;
    if (all_uniform) return {true, sub[0].label, -1};

    QuadNode node;
    for (int k = 0; k < 4; ++k) {
        if (sub[k].node >= 0) {
            node.child[k] = sub[k].node;
        } else {
            QuadNode leaf;
            leaf.label = sub[k].label;
            nodes->push_back(leaf);
            node.child[k] = (int32_t)nodes->size() - 1;
        }
    }
    nodes->push_back(node);
    return {false, CellLabel::Mixed, (int32_t)nodes->size() - 1};
}

Quadtree assemble_tree(const Sampler& sampler, const SquareBounds& bounds, double min_cell,
                       const FlatGrid& grid) {
    Quadtree tree;
    tree.space = sampler.space;
    tree.bounds = bounds;
    tree.mode = sampler.mode;
    tree.det_sign = sampler.det_sign;
    tree.min_cell = min_cell;
    tree.grid_dim = grid.dim;
    tree.raster = grid.labels;

    const MergeResult r = merge_region(grid, 0, 0, grid.dim, &tree.nodes);
    if (r.uniform) {
        QuadNode leaf;
        leaf.label = r.label;
        tree.nodes.push_back(leaf);
        tree.root = 0;
    } else {
        tree.root = r.node;
    }
    return tree;
}

Quadtree build_with_sampler(const Sampler& sampler, const BuildParams& params) {
    SquareBounds bounds = params.bounds.value_or(sampler.space == SpaceKind::Workspace
                                                     ? default_workspace_bounds(*sampler.g)
                                                     : joint_space_bounds());
    double min_cell = params.min_cell > 0 ? params.min_cell : bounds.size / 256.0;
    if (params.samples_per_cell < 5)
        throw std::invalid_argument("samples_per_cell must be at least 5");

    FlatGrid grid = classify_flat(sampler, bounds, min_cell, params.samples_per_cell);
    const bool torus = sampler.space == SpaceKind::JointSpace;
    enrich(sampler, bounds, min_cell, params.samples_per_cell, torus, &grid);
    prune_uncertifiable_free(torus, &grid);
    return assemble_tree(sampler, bounds, min_cell, grid);
}

}  // namespace

Quadtree build_quadtree(const MechanismGeometry& g, SpaceKind space, const WorkingMode& mode,
                        int det_sign, std::span<const ObstaclePolygon> obstacles,
                        const BuildParams& params) {
    if (det_sign != +1 && det_sign != -1)
        throw std::invalid_argument("det_sign must be +1 or -1");
    Sampler sampler;
    sampler.g = &g;
    sampler.space = space;
    sampler.kind = Sampler::Kind::Mode;
    sampler.mode = mode;
    sampler.det_sign = det_sign;
    sampler.obstacles = obstacles;
    return build_with_sampler(sampler, params);
}

// ---------------------------------------------------------------------------
// Quadtree queries
// ---------------------------------------------------------------------------

std::optional<std::pair<int, int>> Quadtree::locate_cell(Point2 p) const {
    if (torus()) {
        p = Point2(wrap_angle(p.x), wrap_angle(p.y));
    } else if (!bounds.contains(p)) {
        return std::nullopt;
    }
    int ix = (int)std::floor((p.x - bounds.x0) / min_cell);
    int iy = (int)std::floor((p.y - bounds.y0) / min_cell);
    ix = std::clamp(ix, 0, grid_dim - 1);
    iy = std::clamp(iy, 0, grid_dim - 1);
    return std::make_pair(ix, iy);
}

std::vector<Quadtree::Leaf> Quadtree::leaves() const {
    std::vector<Leaf> out;
    if (root < 0) return out;
    struct Frame {
        int32_t node;
        int ix, iy, span;
    };
    std::vector<Frame> stack{{root, 0, 0, grid_dim}};
    while (!stack.empty()) {
        const Frame f = stack.back();
        stack.pop_back();
        const QuadNode& n = nodes[f.node];
        if (n.is_leaf()) {
            out.push_back(Leaf{f.node, f.ix, f.iy, f.span, n.label});
            continue;
        }
        const int h = f.span / 2;
        // Push in reverse so traversal emits children in quadrant order.
        stack.push_back({n.child[3], f.ix + h, f.iy + h, h});
        stack.push_back({n.child[2], f.ix, f.iy + h, h});
        stack.push_back({n.child[1], f.ix + h, f.iy, h});
        stack.push_back({n.child[0], f.ix, f.iy, h});
    }
    return out;
}

void Quadtree::rebuild_raster() {
    raster.assign((size_t)grid_dim * grid_dim, CellLabel::Mixed);
    for (const Leaf& leaf : leaves())
        for (int dy = 0; dy < leaf.span; ++dy)
            for (int dx = 0; dx < leaf.span; ++dx)
                raster[(size_t)(leaf.iy + dy) * grid_dim + (leaf.ix + dx)] = leaf.label;
}

bool Quadtree::same_structure(const Quadtree& other) const {
    if (space != other.space || det_sign != other.det_sign || mode != other.mode ||
        grid_dim != other.grid_dim)
        return false;
    if (bounds.x0 != other.bounds.x0 || bounds.y0 != other.bounds.y0 ||
        bounds.size != other.bounds.size || min_cell != other.min_cell)
        return false;

    struct Pair {
        int32_t a, b;
    };
    if ((root < 0) != (other.root < 0)) return false;
    if (root < 0) return true;
    std::vector<Pair> stack{{root, other.root}};
    while (!stack.empty()) {
        const Pair pr = stack.back();
        stack.pop_back();
        const QuadNode& na = nodes[pr.a];
        const QuadNode& nb = other.nodes[pr.b];
        if (na.is_leaf() != nb.is_leaf()) return false;
        if (na.is_leaf()) {
            if (na.label != nb.label) return false;
            continue;
        }
        for (int k = 0; k < 4; ++k) stack.push_back({na.child[k], nb.child[k]});
    }
    return true;
}

// ---------------------------------------------------------------------------
// Aspect extraction
// ---------------------------------------------------------------------------

std::string AspectId::str() const {
    return "M" + std::to_string(mode) + (det_sign > 0 ? "+" : "-") + "#" +
           std::to_string(index);
}

std::vector<FreeAspect> extract_aspects(const Quadtree& tree) {
    const int dim = tree.grid_dim;
    const bool torus = tree.torus();
    std::vector<int32_t> comp((size_t)dim * dim, -1);
    struct Raw {
        std::vector<GridCell> cells;
        size_t min_index = 0;
    };
    std::vector<Raw> raw;

    for (int start = 0; start < dim * dim; ++start) {
        if (tree.raster[start] != CellLabel::Free || comp[start] >= 0) continue;
        Raw r;
        r.min_index = (size_t)start;
        std::deque<int> queue{start};
        comp[start] = (int32_t)raw.size();
        while (!queue.empty()) {
            const int k = queue.front();
            queue.pop_front();
            const int x = k % dim, y = k / dim;
            r.cells.emplace_back((uint16_t)x, (uint16_t)y);
            r.min_index = std::min(r.min_index, (size_t)k);
            const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
            for (int d = 0; d < 4; ++d) {
                int nx = x + dx[d], ny = y + dy[d];
                if (torus) {
                    nx = (nx + dim) % dim;
                    ny = (ny + dim) % dim;
                } else if (nx < 0 || ny < 0 || nx >= dim || ny >= dim)
                    continue;
                const int nk = ny * dim + nx;
                if (tree.raster[nk] == CellLabel::Free && comp[nk] < 0) {
                    comp[nk] = comp[k];
                    queue.push_back(nk);
                }
            }
        }
        raw.push_back(std::move(r));
    }

    std::vector<int> order(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) order[i] = (int)i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (raw[a].cells.size() != raw[b].cells.size())
            return raw[a].cells.size() > raw[b].cells.size();
        return raw[a].min_index < raw[b].min_index;
    });

    std::vector<FreeAspect> aspects(raw.size());
    std::vector<int> rank(raw.size());
    for (size_t oi = 0; oi < order.size(); ++oi) rank[order[oi]] = (int)oi;
    for (size_t oi = 0; oi < order.size(); ++oi) {
        FreeAspect& a = aspects[oi];
        Raw& r = raw[order[oi]];
        a.id = AspectId{tree.mode.index(), tree.det_sign, (int)oi + 1};
        std::sort(r.cells.begin(), r.cells.end(),
                  [](const GridCell& c1, const GridCell& c2) {
                      return c1.second != c2.second ? c1.second < c2.second
                                                    : c1.first < c2.first;
                  });
        a.cells = std::move(r.cells);
        a.area = (double)a.cells.size() * tree.cell_area();
    }

    // Attach FREE leaves to their component.
    for (const Quadtree::Leaf& leaf : tree.leaves()) {
        if (leaf.label != CellLabel::Free) continue;
        const int32_t c = comp[(size_t)leaf.iy * dim + leaf.ix];
        if (c >= 0) aspects[rank[c]].leaf_nodes.push_back(leaf.node);
    }
    return aspects;
}

void project_aspect(const MechanismGeometry& g, const Quadtree& tree, FreeAspect& aspect,
                    const SquareBounds& partner_bounds, double partner_cell) {
    const int pdim = (int)std::lround(partner_bounds.size / partner_cell);
    if (pdim < 1 || std::abs(partner_bounds.size / partner_cell - pdim) > 1e-9 * pdim)
        throw std::invalid_argument("partner grid must tile the partner bounds exactly");
    aspect.partner_bounds = partner_bounds;
    aspect.partner_cell = partner_cell;
    aspect.partner_dim = pdim;
    aspect.partner_cells.clear();

    const bool src_w = tree.space == SpaceKind::Workspace;
    const bool dst_torus = src_w;  // W projects into the joint-space torus

    std::vector<uint8_t> hit((size_t)pdim * pdim, 0);
    auto mark = [&](Point2 pt) -> std::optional<std::pair<int, int>> {
        if (dst_torus) pt = Point2(wrap_angle(pt.x), wrap_angle(pt.y));
        else if (!partner_bounds.contains(pt)) return std::nullopt;
        int ix = std::clamp((int)std::floor((pt.x - partner_bounds.x0) / partner_cell), 0,
                            pdim - 1);
        int iy = std::clamp((int)std::floor((pt.y - partner_bounds.y0) / partner_cell), 0,
                            pdim - 1);
        hit[(size_t)iy * pdim + ix] = 1;
        return std::make_pair(ix, iy);
    };

    // Branch-consistent map of one source cell center; nullopt when the
    // branch disappears (possible only at conservative boundaries).
    auto image = [&](int ix, int iy) -> std::optional<Point2> {
        const Point2 c = tree.cell_center(ix, iy);
        if (src_w) {
            const auto br = ik_branch_for_mode(g, PoseVector(c), tree.mode);
            if (!br) return std::nullopt;
            return Point2(br->q.theta1, br->q.theta2);
        }
        const FkResult fk = forward_kinematics(g, JointVector(c.x, c.y));
        for (const FkBranch& br : fk.branches)
            if (br.det_sign == tree.det_sign) return br.p;
        return std::nullopt;
    };

    // Cache images per source cell, then mark and bridge adjacent images so
    // the projected set stays connected.
    std::map<std::pair<int, int>, Point2> images;
    for (const GridCell& cell : aspect.cells) {
        const auto img = image(cell.first, cell.second);
        if (img) {
            images[{cell.first, cell.second}] = *img;
            mark(*img);
        }
    }
    // Marks a 4-connected digitized path between the two image points so the
    // projected cell set of a connected aspect stays connected.
    auto bridge = [&](const Point2& a, const Point2& b) {
        Vec2 d = b - a;
        if (dst_torus) {
            // Shortest representative on the torus.
            if (d.x > kTwoPi / 2) d.x -= kTwoPi;
            if (d.x < -kTwoPi / 2) d.x += kTwoPi;
            if (d.y > kTwoPi / 2) d.y -= kTwoPi;
            if (d.y < -kTwoPi / 2) d.y += kTwoPi;
        }
        const double len = d.norm();
        const int steps = std::max(1, (int)std::ceil(len / (0.25 * partner_cell)));
        std::optional<std::pair<int, int>> prev;
        for (int s = 0; s <= steps; ++s) {
            const auto cur = mark(a + d * ((double)s / steps));
            if (prev && cur && prev->first != cur->first && prev->second != cur->second) {
                // Diagonal step: insert an axis-aligned elbow cell.
                hit[(size_t)cur->second * pdim + prev->first] = 1;
            }
            if (cur) prev = cur;
        }
    };
    const int dim = tree.grid_dim;
    for (const GridCell& cell : aspect.cells) {
        const auto it = images.find({cell.first, cell.second});
        if (it == images.end()) continue;
        const int nbr[2][2] = {{cell.first + 1, cell.second}, {cell.first, cell.second + 1}};
        for (const auto& nb : nbr) {
            int nx = nb[0], ny = nb[1];
            if (tree.torus()) {
                nx %= dim;
                ny %= dim;
            } else if (nx >= dim || ny >= dim)
                continue;
            const auto jt = images.find({nx, ny});
            if (jt != images.end()) bridge(it->second, jt->second);
        }
    }

    for (int iy = 0; iy < pdim; ++iy)
        for (int ix = 0; ix < pdim; ++ix)
            if (hit[(size_t)iy * pdim + ix])
                aspect.partner_cells.emplace_back((uint16_t)ix, (uint16_t)iy);
}

int AspectMap::aspect_ordinal_at(const Point2& p) const {
    const auto cell = tree.locate_cell(p);
    if (!cell) return -1;
    return aspect_of_cell[(size_t)cell->second * tree.grid_dim + cell->first];
}

AspectMap build_aspect_map(const MechanismGeometry& g, SpaceKind space, const WorkingMode& mode,
                           int det_sign, std::span<const ObstaclePolygon> obstacles,
                           const BuildParams& params) {
    AspectMap map;
    map.tree = build_quadtree(g, space, mode, det_sign, obstacles, params);
    map.aspects = extract_aspects(map.tree);
    map.aspect_of_cell.assign((size_t)map.tree.grid_dim * map.tree.grid_dim, -1);
    for (size_t i = 0; i < map.aspects.size(); ++i)
        for (const GridCell& cell : map.aspects[i].cells)
            map.aspect_of_cell[(size_t)cell.second * map.tree.grid_dim + cell.first] =
                (int32_t)i;
    return map;
}

// ---------------------------------------------------------------------------
// Free workspace / joint space
// ---------------------------------------------------------------------------

namespace {

FreeSpaceMap build_free_space(const MechanismGeometry& g, SpaceKind space,
                              std::span<const ObstaclePolygon> obstacles,
                              const BuildParams& params) {
    Sampler sampler;
    sampler.g = &g;
    sampler.space = space;
    sampler.kind = Sampler::Kind::FreeSpace;
    sampler.obstacles = obstacles;

    FreeSpaceMap out;
    out.tree = build_with_sampler(sampler, params);
    for (CellLabel l : out.tree.raster) {
        if (l == CellLabel::Free) out.free_area += out.tree.cell_area();
        else if (l == CellLabel::Collision) out.blocked_area += out.tree.cell_area();
    }
    out.reachable_area = out.free_area + out.blocked_area;
    return out;
}

}  // namespace

FreeSpaceMap free_workspace(const MechanismGeometry& g,
                            std::span<const ObstaclePolygon> obstacles,
                            const BuildParams& params) {
    return build_free_space(g, SpaceKind::Workspace, obstacles, params);
}

FreeSpaceMap free_jointspace(const MechanismGeometry& g,
                             std::span<const ObstaclePolygon> obstacles,
                             const BuildParams& params) {
    return build_free_space(g, SpaceKind::JointSpace, obstacles, params);
}

}  // namespace mvkit
