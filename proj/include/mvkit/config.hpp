#ifndef MVKIT_CONFIG_HPP
#define MVKIT_CONFIG_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvkit/decomposition.hpp"
#include "mvkit/moveability.hpp"

namespace mvkit {

/// Validation failure with a stable diagnostic code and the offending field.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(std::string code, const std::string& message, std::string field = "")
        : std::runtime_error(message), code_(std::move(code)), field_(std::move(field)) {}

    const std::string& code() const { return code_; }
    const std::string& field() const { return field_; }

  private:
    std::string code_;
    std::string field_;
};

// Diagnostic codes emitted by the loaders.
inline constexpr const char* kErrMissingFile = "MISSING-FILE";
inline constexpr const char* kErrMalformedJson = "MALFORMED-JSON";
inline constexpr const char* kErrBadField = "BAD-FIELD";
inline constexpr const char* kErrBadLength = "BAD-LENGTH";
inline constexpr const char* kErrBadRadius = "BAD-RADIUS";
inline constexpr const char* kErrGeometryInconsistent = "GEOMETRY-INCONSISTENT";
inline constexpr const char* kErrBadPolygon = "BAD-POLYGON";
inline constexpr const char* kErrBadDecomposition = "BAD-DECOMPOSITION";
inline constexpr const char* kErrBadTrajectory = "BAD-TRAJECTORY";

struct DecompositionConfig {
    double min_cell = 0;         ///< requested size; 0 selects the default
    int samples_per_cell = 9;
    std::optional<SquareBounds> bounds;
};

struct ProjectConfig {
    MechanismGeometry geometry;
    std::vector<ObstaclePolygon> obstacles;
    DecompositionConfig decomposition;
    std::string output_dir = "out";

    /// Workspace bounds honoring the optional override.
    SquareBounds workspace_bounds() const;

    /// Build parameters for one space, with min_cell snapped so the bounds
    /// side is a power-of-two multiple of it (never coarser than requested).
    BuildParams build_params(SpaceKind space) const;
};

/// Loads and validates a project configuration. Throws ConfigError.
ProjectConfig load_project_config(const std::string& path);
ProjectConfig parse_project_config(const std::string& text);

/// Loads a trajectory document {waypoints: [[x,y],...], step}. A missing or
/// zero step is filled with default_step. Throws ConfigError.
Trajectory load_trajectory(const std::string& path, double default_step);
Trajectory parse_trajectory(const std::string& text, double default_step);

/// Largest power-of-two cell count whose cell is <= the requested size,
/// returned as the snapped cell size (side / 2^k).
double snap_min_cell(double side, double requested);

}  // namespace mvkit

#endif  // MVKIT_CONFIG_HPP
