#ifndef MVKIT_COLLISION_HPP
#define MVKIT_COLLISION_HPP

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvkit/geometry.hpp"
#include "mvkit/kinematics.hpp"

namespace mvkit {

enum class BodyId : int {
    Base = 0,
    Leg1Proximal = 1,
    Leg1Distal = 2,
    Leg2Proximal = 3,
    Leg2Distal = 4,
    Platform = 5,
};

const char* body_name(BodyId id);

/// The six rigid bodies of the manipulator at one configuration: the base bar
/// over a1-a2, the four leg links as capsules over their center-lines, and
/// the platform as a disc at the revolute center P.
struct BodySet {
    Capsule2 base;
    std::array<Capsule2, 4> links;  // leg1-proximal, leg1-distal, leg2-proximal, leg2-distal
    Capsule2 platform;

    const Capsule2& body(BodyId id) const;
};

using BodyPair = std::pair<BodyId, BodyId>;

struct CollisionReport {
    std::vector<BodyPair> internal_pairs;
    std::vector<std::pair<BodyId, std::string>> external_pairs;

    bool empty() const { return internal_pairs.empty() && external_pairs.empty(); }
};

BodySet body_set(const MechanismGeometry& g, const MechanismConfiguration& c);

/// All colliding body pairs. Pairs that share a revolute joint are tested
/// with both center-lines trimmed back from the shared endpoint by the sum of
/// the radii and then checked for segment crossing, so adjacent links do not
/// trip on the joint itself but a folded link still reports.
std::vector<BodyPair> internal_collisions(const BodySet& bs);

std::vector<std::pair<BodyId, std::string>> external_collisions(
    const BodySet& bs, std::span<const ObstaclePolygon> obstacles);

/// True (with an empty report) iff both collision sets are empty.
std::pair<bool, CollisionReport> is_collision_free(const MechanismGeometry& g,
                                                   const MechanismConfiguration& c,
                                                   std::span<const ObstaclePolygon> obstacles);

}  // namespace mvkit

#endif  // MVKIT_COLLISION_HPP
