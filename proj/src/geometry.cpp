#include "mvkit/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace mvkit {

namespace {

// Orientation of the ordered triple (p, q, r): >0 counterclockwise,
// <0 clockwise, 0 collinear. Exact sign of the cross product.
int orientation(const Point2& p, const Point2& q, const Point2& r) {
    const double v = (q - p).cross(r - p);
    if (v > 0.0) return 1;
    if (v < 0.0) return -1;
    return 0;
}

// q known collinear with segment pr: is it within the bounding box?
bool on_collinear_segment(const Point2& p, const Point2& q, const Point2& r) {
    return q.x <= std::max(p.x, r.x) && q.x >= std::min(p.x, r.x) &&
           q.y <= std::max(p.y, r.y) && q.y >= std::min(p.y, r.y);
}

}  // namespace

double polygon_signed_area(const std::vector<Point2>& vertices) {
    double acc = 0.0;
    const size_t n = vertices.size();
    for (size_t i = 0; i < n; ++i) {
        const Point2& a = vertices[i];
        const Point2& b = vertices[(i + 1) % n];
        acc += a.cross(b);
    }
    return 0.5 * acc;
}

bool is_simple_polygon(const std::vector<Point2>& vertices) {
    const size_t n = vertices.size();
    if (n < 3) return false;
    if (polygon_signed_area(vertices) == 0.0) return false;
    for (size_t i = 0; i < n; ++i) {
        const Segment2 ei{vertices[i], vertices[(i + 1) % n]};
        if (ei.length() == 0.0) return false;
        for (size_t j = i + 1; j < n; ++j) {
            const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            const Segment2 ej{vertices[j], vertices[(j + 1) % n]};
            if (adjacent) {
                // Adjacent edges may only meet at the shared vertex; a
                // collinear spike folding back onto the previous edge is not
                // simple.
                const Point2& shared = (j == i + 1) ? vertices[j] : vertices[0];
                const Point2& prev = (j == i + 1) ? vertices[i] : vertices[1];
                const Point2& next = (j == i + 1) ? vertices[(j + 1) % n] : vertices[n - 1];
                if (orientation(prev, shared, next) == 0 &&
                    (next - shared).dot(prev - shared) > 0.0)
                    return false;
                continue;
            }
            if (segments_intersect(ei, ej)) return false;
        }
    }
    return true;
}

ObstaclePolygon::ObstaclePolygon(std::vector<Point2> verts, std::string label)
    : vertices(std::move(verts)), id(std::move(label)) {
    if (!is_simple_polygon(vertices))
        throw std::invalid_argument("ObstaclePolygon '" + id + "': not a simple polygon");
    if (polygon_signed_area(vertices) < 0.0) std::reverse(vertices.begin(), vertices.end());
}

double segment_point_distance(const Segment2& s, const Point2& p) {
    const Vec2 d = s.b - s.a;
    const double len_sq = d.norm_sq();
    if (len_sq == 0.0) return p.distance_to(s.a);
    double t = (p - s.a).dot(d) / len_sq;
    t = std::clamp(t, 0.0, 1.0);
    return p.distance_to(s.at(t));
}

bool segments_intersect(const Segment2& s1, const Segment2& s2) {
    const Point2 &p1 = s1.a, &q1 = s1.b, &p2 = s2.a, &q2 = s2.b;

    // Degenerate operands fall back to point tests.
    if (s1.length() == 0.0 && s2.length() == 0.0) return p1.x == p2.x && p1.y == p2.y;
    if (s1.length() == 0.0) return segment_point_distance(s2, p1) == 0.0;
    if (s2.length() == 0.0) return segment_point_distance(s1, p2) == 0.0;

    const int o1 = orientation(p1, q1, p2);
    const int o2 = orientation(p1, q1, q2);
    const int o3 = orientation(p2, q2, p1);
    const int o4 = orientation(p2, q2, q1);

    if (o1 != o2 && o3 != o4) return true;

    if (o1 == 0 && on_collinear_segment(p1, p2, q1)) return true;
    if (o2 == 0 && on_collinear_segment(p1, q2, q1)) return true;
    if (o3 == 0 && on_collinear_segment(p2, p1, q2)) return true;
    if (o4 == 0 && on_collinear_segment(p2, q1, q2)) return true;

    return false;
}

double segment_segment_distance(const Segment2& s1, const Segment2& s2) {
    if (segments_intersect(s1, s2)) return 0.0;
    // Non-crossing planar segments attain their minimum at an endpoint.
    const double d1 = segment_point_distance(s2, s1.a);
    const double d2 = segment_point_distance(s2, s1.b);
    const double d3 = segment_point_distance(s1, s2.a);
    const double d4 = segment_point_distance(s1, s2.b);
    return std::min(std::min(d1, d2), std::min(d3, d4));
}

bool point_in_polygon(const Point2& p, const ObstaclePolygon& poly) {
    const size_t n = poly.vertices.size();
    for (size_t i = 0; i < n; ++i) {
        const Segment2 edge{poly.vertices[i], poly.vertices[(i + 1) % n]};
        if (segment_point_distance(edge, p) <= 1e-12) return true;  // on the boundary
    }
    // Crossing number with the half-open edge rule.
    bool inside = false;
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point2& vi = poly.vertices[i];
        const Point2& vj = poly.vertices[j];
        if ((vi.y > p.y) != (vj.y > p.y)) {
            const double x_cross = vj.x + (p.y - vj.y) / (vi.y - vj.y) * (vi.x - vj.x);
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

bool capsule_capsule_intersects(const Capsule2& p, const Capsule2& q) {
    return segment_segment_distance(p.axis, q.axis) <= p.radius + q.radius;
}

bool capsule_polygon_intersects(const Capsule2& c, const ObstaclePolygon& poly) {
    const size_t n = poly.vertices.size();
    for (size_t i = 0; i < n; ++i) {
        const Segment2 edge{poly.vertices[i], poly.vertices[(i + 1) % n]};
        if (segment_segment_distance(c.axis, edge) <= c.radius) return true;
    }
    // No boundary contact: the capsule is either fully inside or fully outside.
    return point_in_polygon(c.axis.a, poly);
}

CircleIntersection circle_circle_intersection(const Point2& c1, double r1, const Point2& c2,
                                              double r2, double tol) {
    if (!(r1 >= 0.0) || !(r2 >= 0.0)) throw std::invalid_argument("circle radii must be >= 0");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");

    CircleIntersection out;
    const Vec2 delta = c2 - c1;
    const double d = delta.norm();

    if (d <= tol && std::abs(r1 - r2) <= tol) {
        out.kind = CircleIntersectKind::Concentric;
        return out;
    }
    if (d - (r1 + r2) > tol || (std::abs(r1 - r2) - d) > tol) {
        out.kind = CircleIntersectKind::None;
        return out;
    }

    const Vec2 u = delta * (1.0 / d);
    const double a = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);

    const bool tangent =
        std::abs(d - (r1 + r2)) <= tol || std::abs(d - std::abs(r1 - r2)) <= tol;
    if (tangent) {
        out.kind = CircleIntersectKind::Tangent;
        out.points[0] = c1 + u * a;
        return out;
    }

    const double h_sq = r1 * r1 - a * a;
    const double h = std::sqrt(std::max(0.0, h_sq));
    const Vec2 perp{-u.y, u.x};

    out.kind = CircleIntersectKind::Two;
    out.points[0] = c1 + u * a + perp * h;
    out.points[1] = c1 + u * a - perp * h;

    // One Newton step on the two circle equations sharpens each point; the
    // 2x2 system is well conditioned away from tangency.
    for (Point2& p : out.points) {
        for (int iter = 0; iter < 2; ++iter) {
            const Vec2 v1 = p - c1;
            const Vec2 v2 = p - c2;
            const double f1 = v1.norm_sq() - r1 * r1;
            const double f2 = v2.norm_sq() - r2 * r2;
            const double j_det = 4.0 * v1.cross(v2);
            if (std::abs(j_det) < 1e-12) break;
            const double dx = (f1 * (2.0 * v2.y) - f2 * (2.0 * v1.y)) / j_det;
            const double dy = (f2 * (2.0 * v1.x) - f1 * (2.0 * v2.x)) / j_det;
            p = Point2(p.x - dx, p.y - dy);
            if (std::abs(f1) + std::abs(f2) < 1e-14) break;
        }
    }
    return out;
}

}  // namespace mvkit
