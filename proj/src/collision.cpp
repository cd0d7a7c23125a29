#include "mvkit/collision.hpp"

#include <algorithm>
#include <cmath>

namespace mvkit {

const char* body_name(BodyId id) {
    switch (id) {
        case BodyId::Base: return "base";
        case BodyId::Leg1Proximal: return "leg1-proximal";
        case BodyId::Leg1Distal: return "leg1-distal";
        case BodyId::Leg2Proximal: return "leg2-proximal";
        case BodyId::Leg2Distal: return "leg2-distal";
        case BodyId::Platform: return "platform";
    }
    return "?";
}

const Capsule2& BodySet::body(BodyId id) const {
    switch (id) {
        case BodyId::Base: return base;
        case BodyId::Leg1Proximal: return links[0];
        case BodyId::Leg1Distal: return links[1];
        case BodyId::Leg2Proximal: return links[2];
        case BodyId::Leg2Distal: return links[3];
        case BodyId::Platform: return platform;
    }
    return base;
}

BodySet body_set(const MechanismGeometry& g, const MechanismConfiguration& c) {
    BodySet bs;
    bs.base = Capsule2({g.a1, g.a2}, g.base_radius);
    bs.links[0] = Capsule2({g.a1, c.b1}, g.link_radius);
    bs.links[1] = Capsule2({c.b1, c.x.p}, g.link_radius);
    bs.links[2] = Capsule2({g.a2, c.b2}, g.link_radius);
    bs.links[3] = Capsule2({c.b2, c.x.p}, g.link_radius);
    bs.platform = Capsule2::disc(c.x.p, g.platform_radius);
    return bs;
}

namespace {

enum class End { A, B };

struct PairRule {
    BodyId first;
    BodyId second;
    bool trimmed;        // shares a revolute joint
    End shared_first;    // end of first's axis at the joint
    End shared_second;   // end of second's axis at the joint
};

// Joint-adjacent pairs carry the trim rule; everything else is a plain
// capsule test. (platform, base) is included: P crossing the base bar is the
// canonical internal collision.
constexpr PairRule kPairRules[] = {
    // trimmed at a shared joint
    {BodyId::Leg1Proximal, BodyId::Base, true, End::A, End::A},          // at a1
    {BodyId::Leg2Proximal, BodyId::Base, true, End::A, End::B},          // at a2
    {BodyId::Leg1Proximal, BodyId::Leg1Distal, true, End::B, End::A},    // at b1
    {BodyId::Leg2Proximal, BodyId::Leg2Distal, true, End::B, End::A},    // at b2
    {BodyId::Leg1Distal, BodyId::Platform, true, End::B, End::A},        // at p
    {BodyId::Leg2Distal, BodyId::Platform, true, End::B, End::A},        // at p
    {BodyId::Leg1Distal, BodyId::Leg2Distal, true, End::B, End::B},      // at p
    // regular capsule pairs
    {BodyId::Leg1Distal, BodyId::Base, false, End::A, End::A},
    {BodyId::Leg2Distal, BodyId::Base, false, End::A, End::A},
    {BodyId::Leg1Proximal, BodyId::Leg2Proximal, false, End::A, End::A},
    {BodyId::Leg1Proximal, BodyId::Leg2Distal, false, End::A, End::A},
    {BodyId::Leg2Proximal, BodyId::Leg1Distal, false, End::A, End::A},
    {BodyId::Leg1Proximal, BodyId::Platform, false, End::A, End::A},
    {BodyId::Leg2Proximal, BodyId::Platform, false, End::A, End::A},
    {BodyId::Platform, BodyId::Base, false, End::A, End::A},
};

// Shortens the axis by `trim` starting from the given end; collapses to the
// far endpoint when the trim exceeds the axis length.
Segment2 trim_axis(const Segment2& axis, End shared, double trim) {
    const double len = axis.length();
    if (len <= trim) {
        const Point2 far = (shared == End::A) ? axis.b : axis.a;
        return {far, far};
    }
    const double t = trim / len;
    if (shared == End::A) return {axis.at(t), axis.b};
    return {axis.a, axis.at(1.0 - t)};
}

// Trimmed center-lines count as colliding when they cross or overlap; the
// tolerance absorbs roundoff in collinear-overlap configurations without
// flagging ordinary elbow angles.
constexpr double kTrimFloor = 1e-6;
constexpr double kContactTol = 1e-9;

bool pair_collides(const BodySet& bs, const PairRule& rule) {
    const Capsule2& x = bs.body(rule.first);
    const Capsule2& y = bs.body(rule.second);
    if (!rule.trimmed) return capsule_capsule_intersects(x, y);
    // The trim always removes the joint point itself, even at zero radii.
    const double trim = x.radius + y.radius + kTrimFloor;
    const Segment2 sx = trim_axis(x.axis, rule.shared_first, trim);
    const Segment2 sy = trim_axis(y.axis, rule.shared_second, trim);
    return segment_segment_distance(sx, sy) <= kContactTol;
}

}  // namespace

std::vector<BodyPair> internal_collisions(const BodySet& bs) {
    std::vector<BodyPair> hits;
    for (const PairRule& rule : kPairRules)
        if (pair_collides(bs, rule)) hits.emplace_back(rule.first, rule.second);
    return hits;
}

std::vector<std::pair<BodyId, std::string>> external_collisions(
    const BodySet& bs, std::span<const ObstaclePolygon> obstacles) {
    std::vector<std::pair<BodyId, std::string>> hits;
    constexpr BodyId kAllBodies[] = {BodyId::Base,         BodyId::Leg1Proximal,
                                     BodyId::Leg1Distal,   BodyId::Leg2Proximal,
                                     BodyId::Leg2Distal,   BodyId::Platform};
    for (const ObstaclePolygon& obst : obstacles)
        for (BodyId id : kAllBodies)
            if (capsule_polygon_intersects(bs.body(id), obst)) hits.emplace_back(id, obst.id);
    return hits;
}

std::pair<bool, CollisionReport> is_collision_free(const MechanismGeometry& g,
                                                   const MechanismConfiguration& c,
                                                   std::span<const ObstaclePolygon> obstacles) {
    const BodySet bs = body_set(g, c);
    CollisionReport report;
    report.internal_pairs = internal_collisions(bs);
    report.external_pairs = external_collisions(bs, obstacles);
    return {report.empty(), report};
}

}  // namespace mvkit
