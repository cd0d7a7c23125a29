#ifndef MVKIT_GEOMETRY_HPP
#define MVKIT_GEOMETRY_HPP

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvkit {

/// Planar point / vector with finite coordinates.
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    Point2() = default;
    Point2(double px, double py) : x(px), y(py) {
        if (!std::isfinite(px) || !std::isfinite(py))
            throw std::invalid_argument("Point2: coordinates must be finite");
    }

    Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
    Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
    Point2 operator*(double s) const { return {x * s, y * s}; }

    double dot(const Point2& o) const { return x * o.x + y * o.y; }
    double cross(const Point2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    double norm_sq() const { return x * x + y * y; }
    double distance_to(const Point2& o) const { return (*this - o).norm(); }
};

using Vec2 = Point2;

/// Line segment; a == b is allowed and treated as a point.
struct Segment2 {
    Point2 a;
    Point2 b;

    Segment2() = default;
    Segment2(const Point2& pa, const Point2& pb) : a(pa), b(pb) {}

    double length() const { return a.distance_to(b); }
    Point2 at(double t) const { return a + (b - a) * t; }
};

/// Segment swept by a disc; radius 0 degenerates to the bare segment.
struct Capsule2 {
    Segment2 axis;
    double radius = 0.0;

    Capsule2() = default;
    Capsule2(const Segment2& ax, double r) : axis(ax), radius(r) {
        if (!(r >= 0.0)) throw std::invalid_argument("Capsule2: radius must be >= 0");
    }
    static Capsule2 disc(const Point2& center, double r) { return Capsule2({center, center}, r); }
};

/// Simple polygon, stored counterclockwise (clockwise input is reversed).
struct ObstaclePolygon {
    std::vector<Point2> vertices;
    std::string id;

    ObstaclePolygon(std::vector<Point2> verts, std::string label);
};

double polygon_signed_area(const std::vector<Point2>& vertices);
bool is_simple_polygon(const std::vector<Point2>& vertices);

// ---------------------------------------------------------------------------
// Predicates and distances. All are pure; boundary contact counts as
// intersection (closed-set semantics).
// ---------------------------------------------------------------------------

double segment_point_distance(const Segment2& s, const Point2& p);
double segment_segment_distance(const Segment2& s1, const Segment2& s2);

/// Boundary-inclusive segment intersection (shared endpoints count).
bool segments_intersect(const Segment2& s1, const Segment2& s2);

/// Point inside or on the boundary of a simple polygon.
bool point_in_polygon(const Point2& p, const ObstaclePolygon& poly);

bool capsule_capsule_intersects(const Capsule2& p, const Capsule2& q);
bool capsule_polygon_intersects(const Capsule2& c, const ObstaclePolygon& poly);

// ---------------------------------------------------------------------------
// Circle-circle intersection
// ---------------------------------------------------------------------------

enum class CircleIntersectKind {
    None,        ///< circles disjoint (too far apart or one inside the other)
    Tangent,     ///< single touching point, within tolerance of tangency
    Two,         ///< two proper intersection points
    Concentric,  ///< same center and radius: a continuum of solutions
};

struct CircleIntersection {
    CircleIntersectKind kind = CircleIntersectKind::None;
    std::array<Point2, 2> points{};  // [0] valid for Tangent, [0..1] for Two

    int count() const {
        switch (kind) {
            case CircleIntersectKind::Tangent: return 1;
            case CircleIntersectKind::Two: return 2;
            default: return 0;
        }
    }
};

/// Intersects circles (c1,r1) and (c2,r2). Tangency within tol collapses to a
/// single point; coincident circles (d <= tol, |r1-r2| <= tol) report
/// Concentric. Two-point results are Newton-refined so the residual against
/// both circle equations stays near machine precision.
CircleIntersection circle_circle_intersection(const Point2& c1, double r1, const Point2& c2,
                                              double r2, double tol = 1e-9);

}  // namespace mvkit

#endif  // MVKIT_GEOMETRY_HPP
