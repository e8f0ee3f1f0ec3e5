#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vibreau/geometry.hpp"
#include "vibreau/pose.hpp"
#include "vibreau/vessel.hpp"

namespace vibreau::fluid {

inline constexpr double kDefaultTimestep = 1.0 / 90.0;
inline constexpr double kStandardGravity = 9.81;

struct FluidParams {
    int particle_count = 600;
    double particle_mass = 1000.0 * 0.006 * 0.006 * 0.006;  // water at rest spacing
    double rest_spacing = 0.006;
    double smoothing_radius = 0.012;
    double viscosity_coeff = 0.05;
    int constraint_iterations = 3;
    /// Fraction of the tangential velocity removed from particles touching a wall.
    double wall_friction = 0.1;
    /// Mass-normalized kinetic energy (m^2/s^2) below which a particle stays put for the step.
    double sleep_threshold = 3e-4;
    double timestep = kDefaultTimestep;
    double gravity = kStandardGravity;
    std::uint64_t seed = 7;
};

/// Throws ConfigError if any FluidParams invariant is violated.
void validate(const FluidParams& params);

/// Particle positions (vessel-local frame) and velocities.
struct FluidState {
    std::vector<Vec3> positions;
    std::vector<Vec3> velocities;
    long long step_index = 0;

    friend bool operator==(const FluidState&, const FluidState&) = default;
};

struct CoGSample {
    double t = 0.0;
    Vec3 cog;

    friend bool operator==(const CoGSample&, const CoGSample&) = default;
};

/// Fills the vessel bottom with a jittered cubic lattice, layer by layer, each layer
/// filled outward from the axis. Jitter is drawn from params.seed.
/// Throws ConfigError if the particles do not fit.
FluidState spawn(const vessel::VesselProfile& profile, const FluidParams& params);

/// Inertial drive for one step, expressed in the vessel-local frame.
struct FrameDrive {
    Vec3 frame_accel;
    Vec3 gravity_local;
};

/// One position-based density-constraint step under the effective body force
/// (gravity_local - frame_accel). Throws SimulationFault on non-finite state.
FluidState step(const FluidState& state, const FluidParams& params,
                const vessel::VesselProfile& profile, const FrameDrive& drive);

/// Arithmetic mean of the particle positions. Throws InputError on an empty state.
Vec3 center_of_gravity(std::span<const Vec3> positions);
inline Vec3 center_of_gravity(const FluidState& state) { return center_of_gravity(state.positions); }

/// Vessel acceleration from the second central difference of the three positions,
/// rotated into the frame of `curr`, plus world gravity (0, 0, -g) in that frame.
/// Throws InputError for orientations whose norm deviates from 1 by more than 1e-6.
FrameDrive world_to_local_drive(const PoseSample& prev, const PoseSample& curr,
                                const PoseSample& next, double timestep,
                                double gravity = kStandardGravity);

/// Drive for sample `index` of a pose stream. Poses are held before the first and
/// after the last sample, so a stream at rest produces a zero frame acceleration.
FrameDrive drive_at(std::span<const PoseSample> poses, std::size_t index, double timestep,
                    double gravity = kStandardGravity);

/// Steps `state` from rest until `seconds` have elapsed with an upright stationary vessel.
void settle(FluidState& state, const FluidParams& params, const vessel::VesselProfile& profile,
            double seconds);

/// Steps once per pose and returns one CoG sample per pose, stamped with the pose time.
std::vector<CoGSample> run_trajectory(FluidState& state, const FluidParams& params,
                                      const vessel::VesselProfile& profile,
                                      std::span<const PoseSample> poses);

}  // namespace vibreau::fluid
