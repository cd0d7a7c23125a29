#include "mvkit/moveability.hpp"

#include <algorithm>
#include <cmath>

namespace mvkit {

void Trajectory::validate() const {
    if (waypoints.size() < 2)
        throw std::invalid_argument("trajectory needs at least 2 waypoints");
    for (size_t i = 1; i < waypoints.size(); ++i)
        if (waypoints[i].distance_to(waypoints[i - 1]) == 0.0)
            throw std::invalid_argument("consecutive trajectory waypoints must be distinct");
    if (!(sampling_step > 0.0))
        throw std::invalid_argument("trajectory sampling step must be > 0");
}

double Trajectory::total_length() const {
    double len = 0;
    for (size_t i = 1; i < waypoints.size(); ++i)
        len += waypoints[i].distance_to(waypoints[i - 1]);
    return len;
}

LocateResult locate(const AspectMap& map, const Point2& p) {
    LocateResult out;
    const auto cell = map.tree.locate_cell(p);
    if (!cell) {
        out.status = LocateResult::Status::OutOfBounds;
        out.label = CellLabel::Unreachable;
        return out;
    }
    const CellLabel label = map.tree.cell(cell->first, cell->second);
    if (label == CellLabel::Free) {
        out.status = LocateResult::Status::InAspect;
        out.aspect_ordinal =
            map.aspect_of_cell[(size_t)cell->second * map.tree.grid_dim + cell->first];
        out.label = label;
        return out;
    }
    out.status = LocateResult::Status::NotFree;
    out.label = label;
    return out;
}

namespace {

struct PathSample {
    Point2 p;
    double arc = 0;
};

// Uniform subdivision per segment, endpoints included, so the sample set is
// the same for the reversed polyline.
std::vector<PathSample> sample_path(const Trajectory& t) {
    std::vector<PathSample> out;
    double arc = 0;
    out.push_back({t.waypoints.front(), 0.0});
    for (size_t i = 1; i < t.waypoints.size(); ++i) {
        const Point2& a = t.waypoints[i - 1];
        const Point2& b = t.waypoints[i];
        const double len = a.distance_to(b);
        const int n = std::max(1, (int)std::ceil(len / t.sampling_step));
        for (int k = 1; k <= n; ++k) {
            const double f = (double)k / n;
            out.push_back({a + (b - a) * f, arc + f * len});
        }
        arc += len;
    }
    return out;
}

}  // namespace

FeasibilityVerdict check_path(const MechanismGeometry& g, const AspectMap& map,
                              const Trajectory& t,
                              std::span<const ObstaclePolygon> obstacles) {
    t.validate();
    FeasibilityVerdict verdict;
    verdict.mode = map.tree.mode;
    verdict.det_sign = map.tree.det_sign;

    auto pointwise_label = [&](const Point2& p) -> CellLabel {
        const PointClass pc = classify_point_w(g, p, map.tree.mode, obstacles);
        if (pc.label == CellLabel::Free && pc.det_sign != map.tree.det_sign)
            return CellLabel::Unreachable;
        return pc.label;
    };

    int aspect = -1;
    const std::vector<PathSample> samples = sample_path(t);
    const PathSample* prev = nullptr;
    for (const PathSample& s : samples) {
        const CellLabel pointwise = pointwise_label(s.p);
        if (pointwise != CellLabel::Free) {
            verdict.blocked_at = s.arc;
            verdict.reason = pointwise;
            return verdict;
        }
        const LocateResult loc = locate(map, s.p);
        if (loc.status != LocateResult::Status::InAspect) {
            verdict.blocked_at = s.arc;
            verdict.reason = loc.label;
            return verdict;
        }
        if (aspect < 0) {
            aspect = loc.aspect_ordinal;
        } else if (loc.aspect_ordinal != aspect) {
            // The separating band can be thinner than the step; densify to
            // find the first blocked point between the two samples.
            verdict.blocked_at = s.arc;
            verdict.reason = loc.label;
            if (prev != nullptr) {
                const double len = prev->p.distance_to(s.p);
                const int fine = std::max(2, (int)std::ceil(len / (map.tree.min_cell / 8.0)));
                for (int k = 1; k <= fine; ++k) {
                    const Point2 p = prev->p + (s.p - prev->p) * ((double)k / fine);
                    const CellLabel pw = pointwise_label(p);
                    const LocateResult fl = locate(map, p);
                    if (pw != CellLabel::Free) {
                        verdict.blocked_at = prev->arc + (s.arc - prev->arc) * k / fine;
                        verdict.reason = pw;
                        break;
                    }
                    if (fl.status != LocateResult::Status::InAspect) {
                        verdict.blocked_at = prev->arc + (s.arc - prev->arc) * k / fine;
                        verdict.reason = fl.label;
                        break;
                    }
                }
            }
            return verdict;
        }
        prev = &s;
    }
    verdict.feasible = true;
    verdict.aspect_ordinal = aspect;
    return verdict;
}

std::vector<MoveabilityOption> moveability(std::span<const AspectMap> maps, const Point2& start,
                                           const Point2& goal) {
    std::vector<MoveabilityOption> out;
    for (const AspectMap& map : maps) {
        const LocateResult a = locate(map, start);
        const LocateResult b = locate(map, goal);
        if (a.status == LocateResult::Status::InAspect &&
            b.status == LocateResult::Status::InAspect && a.aspect_ordinal == b.aspect_ordinal) {
            MoveabilityOption opt;
            opt.mode = map.tree.mode;
            opt.det_sign = map.tree.det_sign;
            opt.aspect_ordinal = a.aspect_ordinal;
            opt.aspect_id = map.aspects[a.aspect_ordinal].id;
            out.push_back(opt);
        }
    }
    return out;
}

}  // namespace mvkit
