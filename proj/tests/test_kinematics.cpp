#include <cmath>
#include <random>

#include "doctest.h"
#include "mvkit/kinematics.hpp"

using namespace mvkit;

namespace {

MechanismGeometry example_geometry() {
    return MechanismGeometry::with_lengths(8, 7, 7, 5, 5);
}

const double kPi = kTwoPi / 2.0;

// Finite-difference Cartesian velocity along the FK branch matching det sign,
// using the nearest pose for branch continuity.
std::optional<Vec2> fd_velocity(const MechanismGeometry& g, const JointVector& q,
                                const Vec2& qdot, int det_sign, const Point2& near,
                                double h) {
    auto pose = [&](double dir) -> std::optional<Point2> {
        const JointVector qq(q.theta1 + dir * h * qdot.x, q.theta2 + dir * h * qdot.y);
        const FkResult fk = forward_kinematics(g, qq);
        const FkBranch* best = nullptr;
        for (const FkBranch& br : fk.branches) {
            if (br.det_sign != det_sign) continue;
            if (best == nullptr || br.p.distance_to(near) < best->p.distance_to(near))
                best = &br;
        }
        if (best == nullptr) return std::nullopt;
        return best->p;
    };
    const auto plus = pose(+1.0), minus = pose(-1.0);
    if (!plus || !minus) return std::nullopt;
    return Vec2((plus->x - minus->x) / (2 * h), (plus->y - minus->y) / (2 * h));
}

}  // namespace

TEST_CASE("closure residual") {
    const MechanismGeometry g = example_geometry();
    const auto zero = closure_residual(g, PoseVector(4, 4), JointVector(kPi / 2, kPi / 2));
    CHECK(std::abs(zero[0]) <= 1e-9);
    CHECK(std::abs(zero[1]) <= 1e-9);

    const auto other = closure_residual(g, PoseVector(4, 10), JointVector(kPi / 2, kPi / 2));
    CHECK(std::abs(other[0]) <= 1e-9);
    CHECK(std::abs(other[1]) <= 1e-9);

    const auto off = closure_residual(g, PoseVector(0, 0), JointVector(0, 0));
    CHECK(off[0] == doctest::Approx(24).epsilon(1e-12));
    CHECK(off[1] == doctest::Approx(200).epsilon(1e-12));
}

TEST_CASE("assemble validates the closure invariant") {
    const MechanismGeometry g = example_geometry();
    CHECK(assemble(g, PoseVector(4, 4), JointVector(kPi / 2, kPi / 2)).has_value());
    CHECK_FALSE(assemble(g, PoseVector(4, 4.1), JointVector(kPi / 2, kPi / 2)).has_value());
}

TEST_CASE("forward kinematics branches and det signs") {
    const MechanismGeometry g = example_geometry();
    const FkResult fk = forward_kinematics(g, JointVector(kPi / 2, kPi / 2));
    REQUIRE(fk.status == FkResult::Status::Ok);
    REQUIRE(fk.branches.size() == 2);
    CHECK(fk.b1.distance_to({0, 7}) <= 1e-9);
    CHECK(fk.b2.distance_to({8, 7}) <= 1e-9);

    const FkBranch* up = nullptr;
    const FkBranch* down = nullptr;
    for (const FkBranch& br : fk.branches) (br.p.y > 7 ? up : down) = &br;
    REQUIRE(up != nullptr);
    REQUIRE(down != nullptr);
    CHECK(up->p.distance_to({4, 10}) <= 1e-9);
    CHECK(up->det_sign == +1);
    CHECK(down->p.distance_to({4, 4}) <= 1e-9);
    CHECK(down->det_sign == -1);
    CHECK(down->det_a == doctest::Approx(-24).epsilon(1e-9));
}

TEST_CASE("forward kinematics q=(0,0) yields two poses symmetric about the base axis") {
    const MechanismGeometry g = example_geometry();
    const FkResult fk = forward_kinematics(g, JointVector(0, 0));
    REQUIRE(fk.status == FkResult::Status::Ok);
    REQUIRE(fk.branches.size() == 2);
    CHECK(fk.branches[0].p.y == doctest::Approx(-fk.branches[1].p.y).epsilon(1e-9));
    for (const FkBranch& br : fk.branches) {
        const auto r = closure_residual(g, PoseVector(br.p), JointVector(0, 0));
        CHECK(std::abs(r[0]) <= 1e-8);
        CHECK(std::abs(r[1]) <= 1e-8);
    }
}

TEST_CASE("forward kinematics concentric degeneracy") {
    const MechanismGeometry g = example_geometry();
    const double t = std::acos(4.0 / 7.0);
    const FkResult fk = forward_kinematics(g, JointVector(t, kPi - t));
    CHECK(fk.status == FkResult::Status::Concentric);
    CHECK(fk.b1.distance_to(fk.b2) <= 1e-9);
}

TEST_CASE("inverse kinematics: four branches with distinct working modes") {
    const MechanismGeometry g = example_geometry();
    const IkResult ik = inverse_kinematics(g, PoseVector(4, 4));
    REQUIRE(ik.branches.size() == 4);

    bool seen[5] = {false, false, false, false, false};
    for (const IkBranch& br : ik.branches) {
        REQUIRE_FALSE(br.serial_singular);
        REQUIRE(br.mode.has_value());
        seen[br.mode->index()] = true;

        // Elbow angles must come from {0, pi/2} x {pi/2, pi}.
        const bool t1_ok = angle_distance(br.q.theta1, 0) <= 1e-9 ||
                           angle_distance(br.q.theta1, kPi / 2) <= 1e-9;
        const bool t2_ok = angle_distance(br.q.theta2, kPi / 2) <= 1e-9 ||
                           angle_distance(br.q.theta2, kPi) <= 1e-9;
        CHECK(t1_ok);
        CHECK(t2_ok);

        // Elbow sign follows the +/- alpha choice.
        if (angle_distance(br.q.theta1, kPi / 2) <= 1e-9) CHECK(br.s1 == +1);
        if (angle_distance(br.q.theta1, 0) <= 1e-9) CHECK(br.s1 == -1);
        if (angle_distance(br.q.theta2, kPi) <= 1e-9) CHECK(br.s2 == +1);
        if (angle_distance(br.q.theta2, kPi / 2) <= 1e-9) CHECK(br.s2 == -1);
    }
    CHECK(seen[1]);
    CHECK(seen[2]);
    CHECK(seen[3]);
    CHECK(seen[4]);
}

TEST_CASE("inverse kinematics at a stretched leg is serial-singular") {
    const MechanismGeometry g = example_geometry();
    const IkResult ik = inverse_kinematics(g, PoseVector(12, 0));
    REQUIRE_FALSE(ik.branches.empty());
    for (const IkBranch& br : ik.branches) {
        CHECK(angle_distance(br.q.theta1, 0) <= 1e-7);  // unique stretched angle
        CHECK(br.s1 == 0);
        CHECK(br.serial_singular);
        CHECK_FALSE(br.mode.has_value());
    }
}

TEST_CASE("inverse kinematics outside the reach annuli is empty") {
    const MechanismGeometry g = example_geometry();
    const IkResult ik = inverse_kinematics(g, PoseVector(100, 100));
    CHECK(ik.branches.empty());
    CHECK(ik.leg_unreachable[0]);
    CHECK(ik.leg_unreachable[1]);
}

TEST_CASE("jacobians at the reference configuration") {
    const MechanismGeometry g = example_geometry();
    const auto c = assemble(g, PoseVector(4, 4), JointVector(kPi / 2, kPi / 2));
    REQUIRE(c.has_value());
    const JacobianPair jp = jacobians(g, *c);
    CHECK(jp.a11 == doctest::Approx(4).epsilon(1e-12));
    CHECK(jp.a12 == doctest::Approx(-3).epsilon(1e-12));
    CHECK(jp.a21 == doctest::Approx(-4).epsilon(1e-12));
    CHECK(jp.a22 == doctest::Approx(-3).epsilon(1e-12));
    CHECK(jp.b11 == doctest::Approx(28).epsilon(1e-12));
    CHECK(jp.b22 == doctest::Approx(-28).epsilon(1e-12));
    CHECK(jp.det_a == doctest::Approx(-24).epsilon(1e-12));
    CHECK(jp.b12 == 0.0);
    CHECK(jp.b21 == 0.0);

    const auto mode = working_mode_of(g, *c, jp);
    REQUIRE(mode.has_value());
    CHECK(mode->index() == 2);  // (+,-)
}

TEST_CASE("working mode classification handles the singular guard") {
    const MechanismGeometry g = example_geometry();
    const auto c = assemble(g, PoseVector(4, 4), JointVector(kPi / 2, kPi / 2));
    REQUIRE(c.has_value());

    JacobianPair jp = jacobians(g, *c);
    jp.b11 = 0;
    CHECK_FALSE(working_mode_of(g, *c, jp).has_value());

    jp.b11 = -28;
    jp.b22 = -28;
    const auto mode = working_mode_of(g, *c, jp);
    REQUIRE(mode.has_value());
    CHECK(mode->index() == 4);  // (-,-)
}

TEST_CASE("velocity transfer: zero input, singular guard, finite differences") {
    const MechanismGeometry g = example_geometry();
    const auto c = assemble(g, PoseVector(4, 4), JointVector(kPi / 2, kPi / 2));
    REQUIRE(c.has_value());
    JacobianPair jp = jacobians(g, *c);

    const auto zero = velocity_transfer(g, jp, Vec2(0, 0));
    REQUIRE(zero.has_value());
    CHECK(zero->norm() <= 1e-12);

    JacobianPair singular = jp;
    singular.det_a = 0;
    CHECK_FALSE(velocity_transfer(g, singular, Vec2(1, 0)).has_value());

    // Finite-difference oracle at the reference configuration.
    const auto t = velocity_transfer(g, jp, Vec2(1, 0));
    REQUIRE(t.has_value());
    const auto fd = fd_velocity(g, c->q, Vec2(1, 0), -1, c->x.p, 1e-6);
    REQUIRE(fd.has_value());
    CHECK(std::abs(t->x - fd->x) <= 1e-4 * std::max(1.0, fd->norm()));
    CHECK(std::abs(t->y - fd->y) <= 1e-4 * std::max(1.0, fd->norm()));
}

TEST_CASE("velocity model matches finite differences on random configurations") {
    const MechanismGeometry g = example_geometry();
    std::mt19937 rng(101);
    std::uniform_real_distribution<double> angle(0, kTwoPi), vel(-1, 1);
    int tested = 0;
    while (tested < 300) {
        const JointVector q(angle(rng), angle(rng));
        const FkResult fk = forward_kinematics(g, q);
        if (fk.status != FkResult::Status::Ok) continue;
        for (const FkBranch& br : fk.branches) {
            if (std::abs(br.det_a) < 1.0) continue;
            const auto c = assemble(g, PoseVector(br.p), q);
            if (!c) continue;
            const JacobianPair jp = jacobians(g, *c);
            if (std::abs(jp.b11) < 1.0 || std::abs(jp.b22) < 1.0) continue;
            const Vec2 qdot(vel(rng), vel(rng));
            if (qdot.norm() < 0.1) continue;
            const auto t = velocity_transfer(g, jp, qdot);
            REQUIRE(t.has_value());
            const auto fd = fd_velocity(g, q, qdot, br.det_sign, br.p, 1e-6);
            if (!fd) continue;
            const double scale = std::max(1.0, fd->norm());
            CHECK(std::abs(t->x - fd->x) <= 1e-4 * scale);
            CHECK(std::abs(t->y - fd->y) <= 1e-4 * scale);
            ++tested;
        }
    }
}

TEST_CASE("FK/IK roundtrip on a joint grid") {
    const MechanismGeometry g = example_geometry();
    const int n = 60;
    int branches_checked = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const JointVector q(i * kTwoPi / n + 0.0123, j * kTwoPi / n + 0.0457);
            const FkResult fk = forward_kinematics(g, q);
            if (fk.status != FkResult::Status::Ok) continue;
            for (const FkBranch& br : fk.branches) {
                if (br.det_sign == 0) continue;
                const IkResult ik = inverse_kinematics(g, PoseVector(br.p));
                bool found = false;
                for (const IkBranch& sol : ik.branches) {
                    if (angle_distance(sol.q.theta1, q.theta1) <= 1e-9 &&
                        angle_distance(sol.q.theta2, q.theta2) <= 1e-9) {
                        found = true;
                        // Mode tag must agree with the Jacobian reading.
                        const auto c = assemble(g, PoseVector(br.p), q);
                        REQUIRE(c.has_value());
                        const auto mode = working_mode_of(g, *c, jacobians(g, *c));
                        if (sol.mode && mode) CHECK(sol.mode->index() == mode->index());
                        break;
                    }
                }
                CHECK(found);
                ++branches_checked;
            }
        }
    }
    CHECK(branches_checked > 2000);
}

TEST_CASE("two FK branches always carry opposite det signs") {
    const MechanismGeometry g = example_geometry();
    std::mt19937 rng(55);
    std::uniform_real_distribution<double> angle(0, kTwoPi);
    for (int trial = 0; trial < 2000; ++trial) {
        const FkResult fk = forward_kinematics(g, JointVector(angle(rng), angle(rng)));
        if (fk.status == FkResult::Status::Ok && fk.branches.size() == 2)
            if (fk.branches[0].det_sign != 0)
                CHECK(fk.branches[0].det_sign == -fk.branches[1].det_sign);
    }
}

TEST_CASE("serial singularities coincide with stretched or folded legs") {
    const MechanismGeometry g = example_geometry();
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> angle(0, kTwoPi);
    for (int trial = 0; trial < 300; ++trial) {
        // Stretched leg 1: elbow on the segment from a1 towards p.
        const double phi = angle(rng);
        const Point2 p_stretched = g.a1 + Point2(std::cos(phi), std::sin(phi)) * (g.L1 + g.L3);
        const auto c1 = assemble(g, PoseVector(p_stretched), JointVector(phi, angle(rng)));
        if (c1) CHECK(std::abs(jacobians(g, *c1).b11) <= 1e-6);

        // Folded leg 1: distal folded back along the proximal.
        const Point2 p_folded = g.a1 + Point2(std::cos(phi), std::sin(phi)) * (g.L1 - g.L3);
        const auto c2 = assemble(g, PoseVector(p_folded), JointVector(phi, angle(rng)));
        if (c2) CHECK(std::abs(jacobians(g, *c2).b11) <= 1e-6);
    }
}

TEST_CASE("parallel singularities coincide with collinear p, b1, b2") {
    // Where the two direct solutions merge, the distal circles are tangent;
    // such configurations must show a vanishing det(A) and collinear points.
    const MechanismGeometry g = example_geometry();
    std::mt19937 rng(88);
    std::uniform_real_distribution<double> angle(0, kTwoPi);
    auto elbow_gap = [&](double t1, double t2) {
        const auto b = elbows_from_joints(g, JointVector(t1, t2));
        return b[0].distance_to(b[1]) - (g.L3 + g.L4);
    };
    int checked = 0;
    for (int trial = 0; trial < 2000 && checked < 300; ++trial) {
        const double t1 = angle(rng);
        // Bisect theta2 to the external tangency |b1 - b2| == L3 + L4.
        double lo = 0, hi = kTwoPi / 2;
        double glo = elbow_gap(t1, lo), ghi = elbow_gap(t1, hi);
        if (glo * ghi > 0) continue;
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double gm = elbow_gap(t1, mid);
            if ((gm <= 0) == (glo <= 0)) {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
                ghi = gm;
            }
        }
        const JointVector q(t1, 0.5 * (lo + hi));
        const auto b = elbows_from_joints(g, q);
        // Pose at the tangency point between the elbows.
        const Vec2 u = b[1] - b[0];
        const Point2 p = b[0] + u * (g.L3 / u.norm());
        CHECK(std::abs((p - b[0]).cross(p - b[1])) <= 1e-6);  // collinear by route one

        const MechanismConfiguration c{PoseVector(p), q, b[0], b[1]};
        CHECK(std::abs(jacobians(g, c).det_a) <= 1e-6);  // determinant route two
        ++checked;
    }
    CHECK(checked >= 100);
}

TEST_CASE("reflection across the base axis flips modes and det sign") {
    const MechanismGeometry g = example_geometry();
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> coord(-12, 12);
    int compared = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const Point2 p(coord(rng), coord(rng));
        const IkResult ik = inverse_kinematics(g, PoseVector(p));
        const IkResult mirrored = inverse_kinematics(g, PoseVector(Point2(p.x, -p.y)));
        if (ik.branches.empty()) {
            CHECK(mirrored.branches.empty());
            continue;
        }
        for (const IkBranch& br : ik.branches) {
            if (br.serial_singular) continue;
            bool matched = false;
            for (const IkBranch& mr : mirrored.branches) {
                if (angle_distance(mr.q.theta1, kTwoPi - br.q.theta1) <= 1e-9 &&
                    angle_distance(mr.q.theta2, kTwoPi - br.q.theta2) <= 1e-9) {
                    matched = true;
                    // Mirrored branch carries the opposite sign pattern, and
                    // det(A) flips with it.
                    CHECK(mr.s1 == -br.s1);
                    CHECK(mr.s2 == -br.s2);
                    const auto c = assemble(g, PoseVector(p), br.q);
                    const auto cm = assemble(g, PoseVector(Point2(p.x, -p.y)), mr.q);
                    REQUIRE(c.has_value());
                    REQUIRE(cm.has_value());
                    CHECK(jacobians(g, *c).det_a ==
                          doctest::Approx(-jacobians(g, *cm).det_a).epsilon(1e-9));
                    break;
                }
            }
            CHECK(matched);
            ++compared;
        }
    }
    CHECK(compared > 300);
}

TEST_CASE("geometry invariants are validated") {
    CHECK_THROWS_AS(MechanismGeometry::with_lengths(8, -7, 7, 5, 5), std::invalid_argument);
    MechanismGeometry g = MechanismGeometry::with_lengths(8, 7, 7, 5, 5);
    g.a2 = Point2(7.5, 0);  // breaks |a2 - a1| == L0
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    CHECK_THROWS_AS(WorkingMode(0, 1), std::invalid_argument);
    CHECK(WorkingMode::from_index(2).s1 == +1);
    CHECK(WorkingMode::from_index(2).s2 == -1);
    CHECK(WorkingMode::from_index(3).index() == 3);
}
