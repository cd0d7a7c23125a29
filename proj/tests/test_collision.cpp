#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "mvkit/collision.hpp"

using namespace mvkit;

namespace {

const double kPi = kTwoPi / 2.0;

MechanismGeometry geometry_with_radii(double r) {
    return MechanismGeometry::with_lengths(8, 7, 7, 5, 5, r, r, r);
}

bool has_pair(const std::vector<BodyPair>& pairs, BodyId a, BodyId b) {
    return std::any_of(pairs.begin(), pairs.end(), [&](const BodyPair& p) {
        return (p.first == a && p.second == b) || (p.first == b && p.second == a);
    });
}

// IK branch with the requested elbow signs; asserts existence.
MechanismConfiguration config_for(const MechanismGeometry& g, const Point2& p, int s1, int s2) {
    const IkResult ik = inverse_kinematics(g, PoseVector(p));
    for (const IkBranch& br : ik.branches)
        if ((br.s1 == s1 || br.s1 == 0) && (br.s2 == s2 || br.s2 == 0))
            return MechanismConfiguration{PoseVector(p), br.q, br.b1, br.b2};
    REQUIRE(false);
    return {};
}

// ---------------------------------------------------------------------------
// Pixel-overlap oracle. Bodies are rasterized at a fixed resolution over the
// intersection of their bounding boxes; joint-adjacent pairs rasterize the
// trimmed center-lines instead, mirroring the adjacency rule.
// ---------------------------------------------------------------------------

constexpr double kPixel = 0.01;

struct Box {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    bool empty() const { return x1 <= x0 || y1 <= y0; }
};

Box capsule_box(const Segment2& axis, double r) {
    return {std::min(axis.a.x, axis.b.x) - r, std::min(axis.a.y, axis.b.y) - r,
            std::max(axis.a.x, axis.b.x) + r, std::max(axis.a.y, axis.b.y) + r};
}

Box intersect_box(const Box& a, const Box& b) {
    return {std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1),
            std::min(a.y1, b.y1)};
}

bool pixels_overlap(const Segment2& s1, double r1, const Segment2& s2, double r2) {
    const Box box = intersect_box(capsule_box(s1, r1 + kPixel), capsule_box(s2, r2 + kPixel));
    if (box.empty()) return false;
    const int nx = (int)std::ceil((box.x1 - box.x0) / kPixel);
    const int ny = (int)std::ceil((box.y1 - box.y0) / kPixel);
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) {
            const Point2 c(box.x0 + i * kPixel, box.y0 + j * kPixel);
            if (segment_point_distance(s1, c) <= r1 + 0.5 * kPixel &&
                segment_point_distance(s2, c) <= r2 + 0.5 * kPixel)
                return true;
        }
    return false;
}

Segment2 trim_from_shared(const Segment2& axis, bool shared_at_a, double trim) {
    const double len = axis.length();
    if (len <= trim) {
        const Point2 far = shared_at_a ? axis.b : axis.a;
        return {far, far};
    }
    const double t = trim / len;
    return shared_at_a ? Segment2{axis.at(t), axis.b} : Segment2{axis.a, axis.at(1.0 - t)};
}

struct OraclePair {
    BodyId first, second;
    bool trimmed;
    bool shared_at_a_first, shared_at_a_second;
};

const OraclePair kOraclePairs[] = {
    {BodyId::Leg1Proximal, BodyId::Base, true, true, true},
    {BodyId::Leg2Proximal, BodyId::Base, true, true, false},
    {BodyId::Leg1Proximal, BodyId::Leg1Distal, true, false, true},
    {BodyId::Leg2Proximal, BodyId::Leg2Distal, true, false, true},
    {BodyId::Leg1Distal, BodyId::Platform, true, false, true},
    {BodyId::Leg2Distal, BodyId::Platform, true, false, true},
    {BodyId::Leg1Distal, BodyId::Leg2Distal, true, false, false},
    {BodyId::Leg1Distal, BodyId::Base, false, true, true},
    {BodyId::Leg2Distal, BodyId::Base, false, true, true},
    {BodyId::Leg1Proximal, BodyId::Leg2Proximal, false, true, true},
    {BodyId::Leg1Proximal, BodyId::Leg2Distal, false, true, true},
    {BodyId::Leg2Proximal, BodyId::Leg1Distal, false, true, true},
    {BodyId::Leg1Proximal, BodyId::Platform, false, true, true},
    {BodyId::Leg2Proximal, BodyId::Platform, false, true, true},
    {BodyId::Platform, BodyId::Base, false, true, true},
};

// Oracle verdict for one pair, plus whether the case is too close to a
// contact boundary for pixel sampling to decide.
struct OracleVerdict {
    bool collides = false;
    bool marginal = false;
};

OracleVerdict oracle_pair(const BodySet& bs, const OraclePair& rule) {
    const Capsule2& x = bs.body(rule.first);
    const Capsule2& y = bs.body(rule.second);
    OracleVerdict v;
    if (rule.trimmed) {
        const double trim = x.radius + y.radius + 1e-6;
        const Segment2 sx = trim_from_shared(x.axis, rule.shared_at_a_first, trim);
        const Segment2 sy = trim_from_shared(y.axis, rule.shared_at_a_second, trim);
        const double d = segment_segment_distance(sx, sy);
        v.collides = pixels_overlap(sx, 0.0, sy, 0.0);
        // Near-touching but non-crossing center-lines are undecidable at
        // pixel resolution; actual crossings (d ~ 0) are kept.
        v.marginal = d > 1e-9 && d <= 2 * kPixel;
        return v;
    }
    const double d = segment_segment_distance(x.axis, y.axis);
    v.collides = pixels_overlap(x.axis, x.radius, y.axis, y.radius);
    v.marginal = std::abs(d - (x.radius + y.radius)) <= 2 * kPixel;
    return v;
}

}  // namespace

TEST_CASE("body set places the six bodies from a configuration") {
    const MechanismGeometry g = geometry_with_radii(0.1);
    const auto c = assemble(g, PoseVector(4, 4), JointVector(kPi / 2, kPi / 2));
    REQUIRE(c.has_value());
    const BodySet bs = body_set(g, *c);

    CHECK(bs.base.axis.a.distance_to({0, 0}) <= 1e-9);
    CHECK(bs.base.axis.b.distance_to({8, 0}) <= 1e-9);
    CHECK(bs.links[0].axis.b.distance_to({0, 7}) <= 1e-9);
    CHECK(bs.links[1].axis.a.distance_to({0, 7}) <= 1e-9);
    CHECK(bs.links[1].axis.b.distance_to({4, 4}) <= 1e-9);
    CHECK(bs.links[2].axis.b.distance_to({8, 7}) <= 1e-9);
    CHECK(bs.links[3].axis.a.distance_to({8, 7}) <= 1e-9);
    CHECK(bs.platform.axis.a.distance_to({4, 4}) <= 1e-9);
    CHECK(bs.platform.axis.length() == 0.0);
    CHECK(bs.platform.radius == doctest::Approx(0.1));
    CHECK(bs.links[0].radius == doctest::Approx(0.1));

    // Zero radii are permitted (degenerate segment bodies).
    const MechanismGeometry g0 = geometry_with_radii(0.0);
    const BodySet bs0 = body_set(g0, *c);
    CHECK(bs0.platform.radius == 0.0);

    // Platform radius is passed through independently.
    MechanismGeometry gp = geometry_with_radii(0.1);
    gp.platform_radius = 0.5;
    CHECK(body_set(gp, *c).platform.radius == doctest::Approx(0.5));
}

TEST_CASE("spread elbow-up configuration is internally collision-free") {
    const MechanismGeometry g = geometry_with_radii(0.05);
    const auto c = assemble(g, PoseVector(4, 4), JointVector(kPi / 2, kPi / 2));
    REQUIRE(c.has_value());
    CHECK(internal_collisions(body_set(g, *c)).empty());
    const auto [free, report] = is_collision_free(g, *c, {});
    CHECK(free);
    CHECK(report.empty());
}

TEST_CASE("proximal link lying on the base bar collides at any radius") {
    for (double r : {0.0, 0.1, 0.3}) {
        const MechanismGeometry g = geometry_with_radii(r);
        // theta1 = 0 puts the proximal of leg 1 along (0,0)-(7,0).
        const IkResult ik = inverse_kinematics(g, PoseVector(4, -4));
        const IkBranch* pick = nullptr;
        for (const IkBranch& br : ik.branches)
            if (angle_distance(br.q.theta1, 0) <= 1e-9) pick = &br;
        REQUIRE(pick != nullptr);
        const MechanismConfiguration c{PoseVector(4, -4), pick->q, pick->b1, pick->b2};
        const auto pairs = internal_collisions(body_set(g, c));
        CHECK(has_pair(pairs, BodyId::Leg1Proximal, BodyId::Base));
    }
}

TEST_CASE("revolute center on the base bar collides platform against base") {
    const MechanismGeometry g = geometry_with_radii(0.1);
    const MechanismConfiguration c = config_for(g, Point2(4, 0), +1, +1);
    const auto pairs = internal_collisions(body_set(g, c));
    CHECK(has_pair(pairs, BodyId::Platform, BodyId::Base));
}

TEST_CASE("external collisions: obstacles far, covering, and reordered") {
    const MechanismGeometry g = geometry_with_radii(0.05);
    const auto c = assemble(g, PoseVector(4, 4), JointVector(kPi / 2, kPi / 2));
    REQUIRE(c.has_value());
    const BodySet bs = body_set(g, *c);

    CHECK(external_collisions(bs, {}).empty());

    const std::vector<ObstaclePolygon> far{
        ObstaclePolygon({{100, 100}, {101, 100}, {101, 101}, {100, 101}}, "far")};
    CHECK(external_collisions(bs, far).empty());

    const std::vector<ObstaclePolygon> covering{
        ObstaclePolygon({{3, 3}, {5, 3}, {5, 5}, {3, 5}}, "box")};
    const auto hits = external_collisions(bs, covering);
    bool platform_hit = false, distal1 = false, distal2 = false;
    for (const auto& [body, id] : hits) {
        if (body == BodyId::Platform) platform_hit = true;
        if (body == BodyId::Leg1Distal) distal1 = true;
        if (body == BodyId::Leg2Distal) distal2 = true;
        CHECK(id == "box");
    }
    CHECK(platform_hit);
    CHECK(distal1);
    CHECK(distal2);
    CHECK_FALSE(is_collision_free(g, *c, covering).first);

    // Order of the obstacle list never changes the verdict.
    std::vector<ObstaclePolygon> both = far;
    both.push_back(covering[0]);
    std::vector<ObstaclePolygon> swapped = covering;
    swapped.push_back(far[0]);
    CHECK(is_collision_free(g, *c, both).first == is_collision_free(g, *c, swapped).first);
}

TEST_CASE("growing radii never removes a collision pair") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> coord(-11, 11), rad(0.0, 0.12);
    int compared = 0;
    for (int trial = 0; trial < 400; ++trial) {
        const Point2 p(coord(rng), coord(rng));
        const double r_small = rad(rng);
        const double r_big = r_small + rad(rng);
        const MechanismGeometry gs = geometry_with_radii(r_small);
        const MechanismGeometry gb = geometry_with_radii(r_big);
        const IkResult ik = inverse_kinematics(gs, PoseVector(p));
        for (const IkBranch& br : ik.branches) {
            const MechanismConfiguration c{PoseVector(p), br.q, br.b1, br.b2};
            const auto small_pairs = internal_collisions(body_set(gs, c));
            const auto big_pairs = internal_collisions(body_set(gb, c));
            for (const BodyPair& pr : small_pairs)
                CHECK(has_pair(big_pairs, pr.first, pr.second));
            ++compared;
        }
    }
    CHECK(compared > 400);
}

TEST_CASE("joint-adjacent pairs never report with zero radii") {
    std::mt19937 rng(37);
    std::uniform_real_distribution<double> coord(-11, 11);
    const MechanismGeometry g = geometry_with_radii(0.0);
    const BodyPair adjacent[] = {
        {BodyId::Leg1Proximal, BodyId::Base},       {BodyId::Leg2Proximal, BodyId::Base},
        {BodyId::Leg1Proximal, BodyId::Leg1Distal}, {BodyId::Leg2Proximal, BodyId::Leg2Distal},
        {BodyId::Leg1Distal, BodyId::Platform},     {BodyId::Leg2Distal, BodyId::Platform},
        {BodyId::Leg1Distal, BodyId::Leg2Distal},
    };
    int checked = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const Point2 p(coord(rng), coord(rng));
        const IkResult ik = inverse_kinematics(g, PoseVector(p));
        for (const IkBranch& br : ik.branches) {
            if (br.serial_singular) continue;  // folded legs legitimately collide
            const MechanismConfiguration c{PoseVector(p), br.q, br.b1, br.b2};
            const auto pairs = internal_collisions(body_set(g, c));
            for (const BodyPair& adj : adjacent)
                CHECK_FALSE(has_pair(pairs, adj.first, adj.second));
            ++checked;
        }
    }
    CHECK(checked > 500);
}

TEST_CASE("collision verdicts agree with the pixel-overlap oracle") {
    const MechanismGeometry g = geometry_with_radii(0.1);
    const int n = 64;
    int agreements = 0, marginal = 0;
    for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
            // One working mode fixed: elbow signs (+,-).
            const Point2 p(-13 + (ix + 0.5) * 26.0 / n, -13 + (iy + 0.5) * 26.0 / n);
            const IkResult ik = inverse_kinematics(g, PoseVector(p));
            const IkBranch* pick = nullptr;
            for (const IkBranch& br : ik.branches)
                if (br.mode && br.mode->index() == 2) pick = &br;
            if (pick == nullptr) continue;
            const MechanismConfiguration c{PoseVector(p), pick->q, pick->b1, pick->b2};
            const BodySet bs = body_set(g, c);

            bool oracle_any = false, any_marginal = false;
            for (const OraclePair& rule : kOraclePairs) {
                const OracleVerdict v = oracle_pair(bs, rule);
                oracle_any = oracle_any || v.collides;
                any_marginal = any_marginal || v.marginal;
            }
            const bool impl_free = is_collision_free(g, c, {}).first;
            if (any_marginal) {
                ++marginal;
                continue;  // within one pixel of a contact boundary
            }
            CHECK(impl_free == !oracle_any);
            ++agreements;
        }
    }
    CHECK(agreements > 1000);
    CHECK(marginal < agreements);
}
