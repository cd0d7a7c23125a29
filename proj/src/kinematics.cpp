#include "mvkit/kinematics.hpp"

#include <algorithm>
#include <cmath>

namespace mvkit {

double wrap_angle(double theta) {
    double t = std::fmod(theta, kTwoPi);
    if (t < 0.0) t += kTwoPi;
    if (t >= kTwoPi) t = 0.0;  // fmod rounding can land exactly on 2*pi
    return t;
}

double angle_distance(double a, double b) {
    double d = std::abs(wrap_angle(a) - wrap_angle(b));
    return std::min(d, kTwoPi - d);
}

MechanismGeometry MechanismGeometry::with_lengths(double l0, double l1, double l2, double l3,
                                                  double l4, double link_r, double base_r,
                                                  double platform_r) {
    MechanismGeometry g;
    g.L0 = l0;
    g.L1 = l1;
    g.L2 = l2;
    g.L3 = l3;
    g.L4 = l4;
    g.a1 = Point2(0.0, 0.0);
    g.a2 = Point2(l0, 0.0);
    g.link_radius = link_r;
    g.base_radius = base_r;
    g.platform_radius = platform_r;
    g.validate();
    return g;
}

void MechanismGeometry::validate() const {
    for (double l : {L0, L1, L2, L3, L4})
        if (!(l > 0.0) || !std::isfinite(l))
            throw std::invalid_argument("MechanismGeometry: link lengths must be > 0");
    if (std::abs(a1.distance_to(a2) - L0) > 1e-9)
        throw std::invalid_argument("MechanismGeometry: |a2 - a1| must equal L0");
    for (double r : {link_radius, base_radius, platform_radius})
        if (!(r >= 0.0) || !std::isfinite(r))
            throw std::invalid_argument("MechanismGeometry: radii must be >= 0");
}

double MechanismGeometry::scale() const {
    return std::max({L0, L1, L2, L3, L4});
}

WorkingMode WorkingMode::from_index(int i) {
    if (i < 1 || i > 4) throw std::invalid_argument("WorkingMode index must be 1..4");
    const int k = i - 1;
    return WorkingMode((k & 2) ? -1 : +1, (k & 1) ? -1 : +1);
}

std::array<Point2, 2> elbows_from_joints(const MechanismGeometry& g, const JointVector& q) {
    std::array<Point2, 2> b;
    for (int leg = 0; leg < 2; ++leg) {
        const double t = q.theta(leg);
        b[leg] = g.anchor(leg) + Point2(std::cos(t), std::sin(t)) * g.proximal(leg);
    }
    return b;
}

std::array<double, 2> closure_residual(const MechanismGeometry& g, const PoseVector& x,
                                       const JointVector& q) {
    const auto b = elbows_from_joints(g, q);
    std::array<double, 2> r;
    for (int leg = 0; leg < 2; ++leg) {
        const double ld = g.distal(leg);
        r[leg] = (x.p - b[leg]).norm_sq() - ld * ld;
    }
    return r;
}

std::optional<MechanismConfiguration> assemble(const MechanismGeometry& g, const PoseVector& x,
                                               const JointVector& q) {
    const auto b = elbows_from_joints(g, q);
    for (int leg = 0; leg < 2; ++leg) {
        if (std::abs(b[leg].distance_to(g.anchor(leg)) - g.proximal(leg)) > 1e-7)
            return std::nullopt;
        if (std::abs(x.p.distance_to(b[leg]) - g.distal(leg)) > 1e-7) return std::nullopt;
    }
    return MechanismConfiguration{x, q, b[0], b[1]};
}

namespace {

int det_sign_with_eps(double v, double eps) {
    if (v > eps) return +1;
    if (v < -eps) return -1;
    return 0;
}

// Tolerance for collapsing two kinematic branches into a tangency. Kept near
// machine precision: configurations inside the default geometric tolerance
// (1e-9) but outside the singularity thresholds still carry two genuinely
// distinct branches that the solvers must preserve.
constexpr double kBranchCollapseTol = 1e-13;

}  // namespace

FkResult forward_kinematics(const MechanismGeometry& g, const JointVector& q) {
    FkResult out;
    const auto b = elbows_from_joints(g, q);
    out.b1 = b[0];
    out.b2 = b[1];

    const CircleIntersection hit =
        circle_circle_intersection(b[0], g.L3, b[1], g.L4, kBranchCollapseTol);
    switch (hit.kind) {
        case CircleIntersectKind::Concentric:
            out.status = FkResult::Status::Concentric;
            return out;
        case CircleIntersectKind::None:
            out.status = FkResult::Status::NoSolution;
            return out;
        default:
            break;
    }

    out.status = FkResult::Status::Ok;
    const double eps_a = g.eps_parallel();
    for (int i = 0; i < hit.count(); ++i) {
        FkBranch branch;
        branch.p = hit.points[i];
        branch.det_a = (branch.p - b[0]).cross(branch.p - b[1]);
        branch.det_sign = det_sign_with_eps(branch.det_a, eps_a);
        out.branches.push_back(branch);
    }
    return out;
}

IkResult inverse_kinematics(const MechanismGeometry& g, const PoseVector& x) {
    IkResult out;
    std::array<std::vector<Point2>, 2> elbow_options;

    for (int leg = 0; leg < 2; ++leg) {
        const CircleIntersection hit =
            circle_circle_intersection(g.anchor(leg), g.proximal(leg), x.p, g.distal(leg),
                                       kBranchCollapseTol);
        switch (hit.kind) {
            case CircleIntersectKind::None:
                out.leg_unreachable[leg] = true;
                break;
            case CircleIntersectKind::Concentric:
                out.leg_degenerate[leg] = true;
                break;
            default:
                for (int i = 0; i < hit.count(); ++i) elbow_options[leg].push_back(hit.points[i]);
                break;
        }
    }
    if (out.leg_unreachable[0] || out.leg_unreachable[1] || out.leg_degenerate[0] ||
        out.leg_degenerate[1])
        return out;

    const double eps_b = g.eps_serial();
    for (const Point2& e1 : elbow_options[0]) {
        for (const Point2& e2 : elbow_options[1]) {
            IkBranch br;
            br.b1 = e1;
            br.b2 = e2;
            const Vec2 d1 = e1 - g.a1;
            const Vec2 d2 = e2 - g.a2;
            br.q = JointVector(std::atan2(d1.y, d1.x), std::atan2(d2.y, d2.x));
            // B_ii equals the cross product (p - a_i) x (b_i - a_i).
            const double bv1 = (x.p - g.a1).cross(d1);
            const double bv2 = (x.p - g.a2).cross(d2);
            br.s1 = det_sign_with_eps(bv1, eps_b);
            br.s2 = det_sign_with_eps(bv2, eps_b);
            br.serial_singular = (br.s1 == 0 || br.s2 == 0);
            if (!br.serial_singular) br.mode = WorkingMode(br.s1, br.s2);
            out.branches.push_back(br);
        }
    }

    // Deduplicate branches that coincide at a serial boundary (a tangent leg
    // yields one elbow already, so nothing to do in the common case).
    return out;
}

std::optional<IkBranch> ik_branch_for_mode(const MechanismGeometry& g, const PoseVector& x,
                                           const WorkingMode& mode) {
    const IkResult ik = inverse_kinematics(g, x);
    for (const IkBranch& br : ik.branches) {
        const bool m1 = (br.s1 == 0) || (br.s1 == mode.s1);
        const bool m2 = (br.s2 == 0) || (br.s2 == mode.s2);
        if (m1 && m2) return br;
    }
    return std::nullopt;
}

JacobianPair jacobians(const MechanismGeometry& g, const MechanismConfiguration& c) {
    JacobianPair jp;
    const Vec2 u1 = c.x.p - c.b1;
    const Vec2 u2 = c.x.p - c.b2;
    jp.a11 = u1.x;
    jp.a12 = u1.y;
    jp.a21 = u2.x;
    jp.a22 = u2.y;
    jp.det_a = jp.a11 * jp.a22 - jp.a12 * jp.a21;

    const double s1 = std::sin(c.q.theta1), c1 = std::cos(c.q.theta1);
    const double s2 = std::sin(c.q.theta2), c2 = std::cos(c.q.theta2);
    jp.b11 = g.L1 * (u1.x * s1 - u1.y * c1);
    jp.b22 = g.L2 * (u2.x * s2 - u2.y * c2);
    jp.det_b = jp.b11 * jp.b22;
    return jp;
}

std::optional<WorkingMode> working_mode_of(const MechanismGeometry& g,
                                           const MechanismConfiguration& c,
                                           const JacobianPair& jp) {
    (void)c;
    const double eps_b = g.eps_serial();
    if (std::abs(jp.b11) <= eps_b || std::abs(jp.b22) <= eps_b) return std::nullopt;
    return WorkingMode(jp.b11 > 0 ? +1 : -1, jp.b22 > 0 ? +1 : -1);
}

std::optional<Vec2> velocity_transfer(const MechanismGeometry& g, const JacobianPair& jp,
                                      const Vec2& qdot) {
    if (std::abs(jp.det_a) <= g.eps_parallel()) return std::nullopt;
    // Solve A t = -B qdot.
    const double r1 = -jp.b11 * qdot.x;
    const double r2 = -jp.b22 * qdot.y;
    const double tx = (r1 * jp.a22 - r2 * jp.a12) / jp.det_a;
    const double ty = (r2 * jp.a11 - r1 * jp.a21) / jp.det_a;
    return Vec2(tx, ty);
}

}  // namespace mvkit
