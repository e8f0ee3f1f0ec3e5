#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vibreau/geometry.hpp"

namespace vibreau::vessel {

/// One (height, radius) pair of an axisymmetric profile, in meters.
struct Knot {
    double z = 0.0;
    double radius = 0.0;
};

/// Axisymmetric container described by a piecewise-linear radius-vs-height curve.
///
/// Knots are strictly increasing in z, start at z = 0 and end at z = height.
/// Construction validates these invariants and throws ConfigError otherwise.
class VesselProfile {
public:
    VesselProfile(std::string name, double height, std::vector<Knot> knots,
                  double shell_thickness = 0.002);

    const std::string& name() const noexcept { return name_; }
    double height() const noexcept { return height_; }
    const std::vector<Knot>& knots() const noexcept { return knots_; }
    double shell_thickness() const noexcept { return shell_thickness_; }

    double min_radius() const noexcept;
    double max_radius() const noexcept;

    /// Internal volume in m^3 (sum of conical frusta).
    double volume() const noexcept;

private:
    std::string name_;
    double height_;
    std::vector<Knot> knots_;
    double shell_thickness_;
};

/// Cylindrical beaker: 165 mm tall, 62.5 mm radius.
VesselProfile beaker();
/// Erlenmeyer flask: single linear taper from 62.5 mm to 20 mm over 165 mm.
VesselProfile erlen();
/// Florence flask: 62.5 mm bottom, 80 mm at half height, 20 mm top.
VesselProfile florence();

/// Looks up one of the built-in profiles ("beaker", "erlen", "florence").
VesselProfile builtin_profile(std::string_view name);

/// Parses a profile from its JSON text form:
/// {"name": "...", "height": 0.165, "knots": [[0, 0.0625], [0.165, 0.02]], "shell_thickness": 0.002}
VesselProfile profile_from_json(std::string_view text);
std::string profile_to_json(const VesselProfile& profile);

/// Radius at height z by linear interpolation between the bracketing knots.
/// Throws DomainError when z is outside [0, height].
double profile_radius(const VesselProfile& profile, double z);

bool contains(const VesselProfile& profile, const Vec3& p);

struct BoundaryProjection {
    Vec3 point;
    /// Inward unit normal of the applied clamp; zero when no correction was needed.
    Vec3 normal;
    bool corrected = false;
};

/// Clamps p axially to [0, height] and then radially to profile_radius(z).
/// When both clamps apply the normal is the normalized sum of the two.
/// A point on the axis that still needs a radial clamp uses +x as its direction.
BoundaryProjection project_to_boundary(const VesselProfile& profile, const Vec3& p);

enum class Mounting { inside, outside };

/// Motors on a ring along the wall, paired one-to-one with trigger anchors near the
/// bottom. Motor k and anchor k share azimuth 2*pi*k/motor_count.
struct ActuatorLayout {
    int motor_count = 0;
    double ring_height = 0.0;
    std::vector<Vec3> motor_positions;
    double anchor_height = 0.0;
    double anchor_radius = 0.0;
    std::vector<Vec3> anchor_positions;
    Mounting mounting = Mounting::inside;

    double azimuth(int motor) const;
};

inline constexpr double kDefaultRingHeight = 0.040;
inline constexpr double kDefaultAnchorHeight = 0.010;

bool is_supported_motor_count(int motor_count);

/// Places motor_count motors on the wall at ring_height and the anchors at
/// anchor_height. `anchor_radius_fraction` scales the anchor distance from the axis
/// relative to the wall radius at anchor_height (1 puts anchors on the wall).
/// Throws ConfigError for motor counts outside {4, 6, 8} or heights outside the vessel.
ActuatorLayout layout_actuators(const VesselProfile& profile, int motor_count,
                                double ring_height = kDefaultRingHeight,
                                double anchor_height = kDefaultAnchorHeight,
                                double anchor_radius_fraction = 1.0,
                                Mounting mounting = Mounting::inside);

}  // namespace vibreau::vessel
