#ifndef MVKIT_KINEMATICS_HPP
#define MVKIT_KINEMATICS_HPP

#include <array>
#include <optional>
#include <vector>

#include "mvkit/geometry.hpp"

namespace mvkit {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Wraps an angle into [0, 2*pi).
double wrap_angle(double theta);

/// Absolute angular distance mod 2*pi, in [0, pi].
double angle_distance(double a, double b);

/// Link lengths and body radii of the planar five-bar. Leg 1 is the RR chain
/// a1 -> b1 -> p (proximal L1, distal L3); leg 2 is a2 -> b2 -> p (L2, L4).
/// The base bar spans a1 -> a2 with |a2 - a1| == L0.
struct MechanismGeometry {
    double L0 = 0, L1 = 0, L2 = 0, L3 = 0, L4 = 0;
    Point2 a1;
    Point2 a2;
    double link_radius = 0.1;
    double base_radius = 0.1;
    double platform_radius = 0.1;

    /// Anchors placed on the x axis: a1 = (0,0), a2 = (L0,0).
    static MechanismGeometry with_lengths(double l0, double l1, double l2, double l3, double l4,
                                          double link_r = 0.1, double base_r = 0.1,
                                          double platform_r = 0.1);

    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;

    const Point2& anchor(int leg) const { return leg == 0 ? a1 : a2; }
    double proximal(int leg) const { return leg == 0 ? L1 : L2; }
    double distal(int leg) const { return leg == 0 ? L3 : L4; }

    double scale() const;
    /// Threshold under which det(A) counts as a parallel singularity.
    double eps_parallel() const { return 1e-8 * scale() * scale(); }
    /// Threshold under which a diagonal entry of B counts as a serial singularity.
    double eps_serial() const { return 1e-8 * scale() * scale(); }
};

/// Actuated joint angles, each normalized to [0, 2*pi).
struct JointVector {
    double theta1 = 0;
    double theta2 = 0;

    JointVector() = default;
    JointVector(double t1, double t2) : theta1(wrap_angle(t1)), theta2(wrap_angle(t2)) {}
    double theta(int leg) const { return leg == 0 ? theta1 : theta2; }
};

/// Output pose: position of the revolute center P.
struct PoseVector {
    Point2 p;

    PoseVector() = default;
    explicit PoseVector(const Point2& pos) : p(pos) {}
    PoseVector(double x, double y) : p(x, y) {}
};

/// Sign pattern of the diagonal of B. Exactly four values; index() follows the
/// fixed enumeration (+,+)=1, (+,-)=2, (-,+)=3, (-,-)=4.
struct WorkingMode {
    int s1 = +1;
    int s2 = +1;

    WorkingMode() = default;
    WorkingMode(int sign1, int sign2) : s1(sign1), s2(sign2) {
        if ((s1 != 1 && s1 != -1) || (s2 != 1 && s2 != -1))
            throw std::invalid_argument("WorkingMode: signs must be +1 or -1");
    }
    int sign(int leg) const { return leg == 0 ? s1 : s2; }
    int index() const { return 1 + (s1 < 0 ? 2 : 0) + (s2 < 0 ? 1 : 0); }
    static WorkingMode from_index(int i);
    bool operator==(const WorkingMode& o) const { return s1 == o.s1 && s2 == o.s2; }
    bool operator!=(const WorkingMode& o) const { return !(*this == o); }
};

/// A full mechanism configuration (X, q) with the derived passive elbows.
struct MechanismConfiguration {
    PoseVector x;
    JointVector q;
    Point2 b1;
    Point2 b2;

    const Point2& elbow(int leg) const { return leg == 0 ? b1 : b2; }
};

/// Direct and inverse kinematic matrices at a configuration. A has rows
/// (p-b1)^T and (p-b2)^T; B is diagonal by construction.
struct JacobianPair {
    double a11 = 0, a12 = 0, a21 = 0, a22 = 0;
    double b11 = 0, b22 = 0;
    double b12 = 0, b21 = 0;  // identically zero, kept for the diagonality contract
    double det_a = 0;
    double det_b = 0;
};

/// Closure residual (|p-b1(q)|^2 - L3^2, |p-b2(q)|^2 - L4^2); zero iff (x,q)
/// is a valid mechanism configuration.
std::array<double, 2> closure_residual(const MechanismGeometry& g, const PoseVector& x,
                                       const JointVector& q);

/// Elbow positions b_i(q) = a_i + L_i (cos t_i, sin t_i).
std::array<Point2, 2> elbows_from_joints(const MechanismGeometry& g, const JointVector& q);

/// Builds a configuration from (x, q) and checks the closure invariant
/// (infinity-norm residual on link lengths <= 1e-7). Returns nullopt when the
/// pair does not close.
std::optional<MechanismConfiguration> assemble(const MechanismGeometry& g, const PoseVector& x,
                                               const JointVector& q);

// ---------------------------------------------------------------------------
// Forward kinematics
// ---------------------------------------------------------------------------

struct FkBranch {
    Point2 p;
    double det_a = 0;  ///< det(A) at this pose
    int det_sign = 0;  ///< sign of det(A); 0 within the singularity threshold
};

struct FkResult {
    enum class Status {
        Ok,          ///< one or two branches
        NoSolution,  ///< distal circles do not meet
        Concentric,  ///< b1 == b2 with L3 == L4: a continuum of poses
    };
    Status status = Status::NoSolution;
    std::vector<FkBranch> branches;
    Point2 b1;
    Point2 b2;
};

FkResult forward_kinematics(const MechanismGeometry& g, const JointVector& q);

// ---------------------------------------------------------------------------
// Inverse kinematics
// ---------------------------------------------------------------------------

struct IkBranch {
    JointVector q;
    Point2 b1;
    Point2 b2;
    int s1 = 0;  ///< sign of B11; 0 at a serial-singular boundary
    int s2 = 0;  ///< sign of B22
    bool serial_singular = false;
    std::optional<WorkingMode> mode;  ///< set iff not serial-singular
};

struct IkResult {
    std::vector<IkBranch> branches;
    std::array<bool, 2> leg_unreachable{false, false};
    /// Leg anchor coincides with the target and proximal == distal length:
    /// infinitely many elbow angles (always serial-singular).
    std::array<bool, 2> leg_degenerate{false, false};
};

IkResult inverse_kinematics(const MechanismGeometry& g, const PoseVector& x);

/// The unique IK branch whose elbow signs match the working mode, treating a
/// zero sign (serial boundary) as matching either side. Nullopt when the pose
/// is unreachable in that mode.
std::optional<IkBranch> ik_branch_for_mode(const MechanismGeometry& g, const PoseVector& x,
                                           const WorkingMode& mode);

// ---------------------------------------------------------------------------
// Jacobians, working modes, velocities
// ---------------------------------------------------------------------------

JacobianPair jacobians(const MechanismGeometry& g, const MechanismConfiguration& c);

/// Sign pattern of B's diagonal, or nullopt (SERIAL-SINGULAR) when a diagonal
/// entry is below the serial threshold.
std::optional<WorkingMode> working_mode_of(const MechanismGeometry& g,
                                           const MechanismConfiguration& c,
                                           const JacobianPair& jp);

/// Cartesian velocity t = -A^{-1} B qdot; nullopt (PARALLEL-SINGULAR) when
/// |det A| is below the parallel threshold.
std::optional<Vec2> velocity_transfer(const MechanismGeometry& g, const JacobianPair& jp,
                                      const Vec2& qdot);

}  // namespace mvkit

#endif  // MVKIT_KINEMATICS_HPP
