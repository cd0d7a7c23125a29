#ifndef MVKIT_MOVEABILITY_HPP
#define MVKIT_MOVEABILITY_HPP

#include <optional>
#include <span>
#include <vector>

#include "mvkit/decomposition.hpp"

namespace mvkit {

/// Polyline in the workspace, sampled at fixed arc-length steps.
struct Trajectory {
    std::vector<Point2> waypoints;
    double sampling_step = 0;

    /// Throws std::invalid_argument on fewer than 2 waypoints, coincident
    /// consecutive waypoints, or a non-positive step.
    void validate() const;
    double total_length() const;
};

struct LocateResult {
    enum class Status { InAspect, NotFree, OutOfBounds };
    Status status = Status::OutOfBounds;
    int aspect_ordinal = -1;        // valid for InAspect
    CellLabel label = CellLabel::Unreachable;  // cell label for NotFree
};

/// Aspect membership of a workspace point in a finished (mode, sign) map.
LocateResult locate(const AspectMap& map, const Point2& p);

struct FeasibilityVerdict {
    bool feasible = false;
    WorkingMode mode;
    int det_sign = 0;
    std::optional<int> aspect_ordinal;   // set when feasible
    std::optional<double> blocked_at;    // arc length of the first blocker
    std::optional<CellLabel> reason;     // label at the first blocker
};

/// Samples the polyline at its step (each segment subdivided uniformly, so
/// the sample set is invariant under reversal). Feasible iff every sample is
/// FREE pointwise and every sample lies in one aspect of the map.
FeasibilityVerdict check_path(const MechanismGeometry& g, const AspectMap& map,
                              const Trajectory& t,
                              std::span<const ObstaclePolygon> obstacles);

struct MoveabilityOption {
    WorkingMode mode;
    int det_sign = 0;
    int aspect_ordinal = -1;
    AspectId aspect_id;
};

/// All (mode, det sign) pairs whose aspect contains both endpoints. Expects
/// one finished map per (mode, sign) pair.
std::vector<MoveabilityOption> moveability(std::span<const AspectMap> maps, const Point2& start,
                                           const Point2& goal);

}  // namespace mvkit

#endif  // MVKIT_MOVEABILITY_HPP
