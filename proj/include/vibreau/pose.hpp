#pragma once

#include <vector>

#include "vibreau/geometry.hpp"

namespace vibreau {

/// Tracked vessel pose: world-frame position (m) and orientation at time t (s).
struct PoseSample {
    double t = 0.0;
    Vec3 position;
    Quat orientation;

    friend bool operator==(const PoseSample&, const PoseSample&) = default;
};

/// Pose stream sampled at a fixed timestep.
using Trajectory = std::vector<PoseSample>;

}  // namespace vibreau
