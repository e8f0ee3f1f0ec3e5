#include "vibreau/fluid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <string>

#include "vibreau/errors.hpp"

namespace vibreau::fluid {

namespace {

constexpr double kJitterFraction = 0.05;
// Constraint-force mixing term keeping lambda bounded for sparse neighborhoods.
constexpr double kRelaxation = 10.0;

struct Kernels {
    double h;
    double h2;
    double poly6_coeff;
    double spiky_coeff;

    explicit Kernels(double radius)
        : h(radius),
          h2(radius * radius),
          poly6_coeff(315.0 / (64.0 * std::numbers::pi * std::pow(radius, 9))),
          spiky_coeff(-45.0 / (std::numbers::pi * std::pow(radius, 6))) {}

    double poly6(double r2) const {
        if (r2 >= h2) return 0.0;
        const double d = h2 - r2;
        return poly6_coeff * d * d * d;
    }

    // Gradient with respect to the first particle of the pair.
    Vec3 spiky_grad(const Vec3& rij, double r) const {
        if (r >= h || r <= 0.0) return {};
        const double d = h - r;
        return rij * (spiky_coeff * d * d / r);
    }
};

// Uniform grid with cell size >= smoothing radius, rebuilt each step by counting sort.
class NeighborGrid {
public:
    NeighborGrid(const vessel::VesselProfile& profile, double cell) : cell_(cell) {
        const double extent = profile.max_radius() + cell;
        origin_ = {-extent, -extent, -cell};
        nx_ = static_cast<int>(std::ceil(2.0 * extent / cell)) + 1;
        ny_ = nx_;
        nz_ = static_cast<int>(std::ceil((profile.height() + 2.0 * cell) / cell)) + 1;
    }

    void build(const std::vector<Vec3>& pts) {
        const std::size_t n = pts.size();
        cell_of_.resize(n);
        starts_.assign(static_cast<std::size_t>(nx_ * ny_ * nz_) + 1, 0);
        for (std::size_t i = 0; i < n; ++i) {
            cell_of_[i] = index(coords(pts[i]));
            ++starts_[cell_of_[i] + 1];
        }
        for (std::size_t c = 1; c < starts_.size(); ++c) starts_[c] += starts_[c - 1];
        sorted_.resize(n);
        std::vector<int> fill(starts_.begin(), starts_.end() - 1);
        for (std::size_t i = 0; i < n; ++i) sorted_[fill[cell_of_[i]]++] = static_cast<int>(i);
    }

    // Appends the indices j != i with |p_i - p_j| < radius, in ascending cell order.
    void neighbors(const std::vector<Vec3>& pts, std::size_t i, double radius2,
                   std::vector<int>& out) const {
        const auto [cx, cy, cz] = coords(pts[i]);
        for (int dz = -1; dz <= 1; ++dz) {
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int x = cx + dx, y = cy + dy, z = cz + dz;
                    if (x < 0 || y < 0 || z < 0 || x >= nx_ || y >= ny_ || z >= nz_) continue;
                    const int c = index({x, y, z});
                    for (int k = starts_[c]; k < starts_[c + 1]; ++k) {
                        const int j = sorted_[k];
                        if (static_cast<std::size_t>(j) == i) continue;
                        const Vec3 d = pts[i] - pts[j];
                        if (dot(d, d) < radius2) out.push_back(j);
                    }
                }
            }
        }
    }

private:
    struct Cell {
        int x, y, z;
    };

    Cell coords(const Vec3& p) const {
        auto clampi = [](double v, int n) {
            return std::clamp(static_cast<int>(std::floor(v)), 0, n - 1);
        };
        return {clampi((p.x - origin_.x) / cell_, nx_), clampi((p.y - origin_.y) / cell_, ny_),
                clampi((p.z - origin_.z) / cell_, nz_)};
    }
    int index(Cell c) const { return (c.z * ny_ + c.y) * nx_ + c.x; }

    double cell_;
    Vec3 origin_;
    int nx_ = 0, ny_ = 0, nz_ = 0;
    std::vector<int> cell_of_;
    std::vector<int> starts_;
    std::vector<int> sorted_;
};

// Density of an interior particle sitting on the undisturbed lattice.
double rest_density(const FluidParams& params, const Kernels& kernels) {
    const int reach = static_cast<int>(std::ceil(params.smoothing_radius / params.rest_spacing));
    double sum = 0.0;
    for (int i = -reach; i <= reach; ++i) {
        for (int j = -reach; j <= reach; ++j) {
            for (int k = -reach; k <= reach; ++k) {
                const double s = params.rest_spacing;
                sum += kernels.poly6(s * s * (i * i + j * j + k * k));
            }
        }
    }
    return params.particle_mass * sum;
}

// Density and normal density-gradient contributed by a wall, modeled as the lattice
// continuing beyond it: ghost layers at depths s/2 + k*s below the wall plane.
class WallTable {
public:
    WallTable(const FluidParams& params, const Kernels& kernels)
        : step_(kernels.h / (kSamples - 1)), density_(kSamples), gradient_(kSamples) {
        const double s = params.rest_spacing;
        const int reach = static_cast<int>(std::ceil(kernels.h / s));
        for (int n = 0; n < kSamples; ++n) {
            const double d = n * step_;
            double w = 0.0, g = 0.0;
            for (int k = 0; d + s / 2.0 + k * s < kernels.h; ++k) {
                const double dz = d + s / 2.0 + k * s;
                for (int i = -reach; i <= reach; ++i) {
                    for (int j = -reach; j <= reach; ++j) {
                        const Vec3 rij{i * s, j * s, dz};
                        const double r = norm(rij);
                        w += kernels.poly6(r * r);
                        g += kernels.spiky_grad(rij, r).z;
                    }
                }
            }
            density_[n] = params.particle_mass * w;
            gradient_[n] = params.particle_mass * g;
        }
    }

    // Ghost density at distance d from the wall.
    double density(double d) const { return lookup(density_, d); }
    // Component of the ghost density gradient along the inward normal (negative).
    double gradient(double d) const { return lookup(gradient_, d); }

private:
    static constexpr int kSamples = 65;

    double lookup(const std::vector<double>& table, double d) const {
        if (d < 0.0) d = 0.0;
        const double x = d / step_;
        const int i = static_cast<int>(x);
        if (i >= kSamples - 1) return 0.0;
        const double t = x - i;
        return table[i] + t * (table[i + 1] - table[i]);
    }

    double step_;
    std::vector<double> density_;
    std::vector<double> gradient_;
};

struct WallContact {
    Vec3 normal;  // inward
    double distance;
};

// Walls within the smoothing radius of p: floor, lid and the side wall (locally planar).
int nearby_walls(const vessel::VesselProfile& profile, const Vec3& p, double h,
                 std::array<WallContact, 3>& out) {
    int count = 0;
    if (p.z < h) out[count++] = {{0.0, 0.0, 1.0}, p.z};
    if (profile.height() - p.z < h) out[count++] = {{0.0, 0.0, -1.0}, profile.height() - p.z};
    const double z = std::clamp(p.z, 0.0, profile.height());
    const double r = radial(p);
    const double gap = vessel::profile_radius(profile, z) - r;
    if (gap < h) {
        const Vec3 outward = r > 0.0 ? Vec3{p.x / r, p.y / r, 0.0} : Vec3{1.0, 0.0, 0.0};
        out[count++] = {-outward, gap};
    }
    return count;
}

struct SolverTables {
    double smoothing_radius;
    double rest_spacing;
    double particle_mass;
    Kernels kernels;
    double rest_density;
    WallTable walls;

    explicit SolverTables(const FluidParams& params)
        : smoothing_radius(params.smoothing_radius),
          rest_spacing(params.rest_spacing),
          particle_mass(params.particle_mass),
          kernels(params.smoothing_radius),
          rest_density(fluid::rest_density(params, kernels)),
          walls(params, kernels) {}

    bool matches(const FluidParams& params) const {
        return smoothing_radius == params.smoothing_radius &&
               rest_spacing == params.rest_spacing && particle_mass == params.particle_mass;
    }
};

// Kernel and wall tables depend only on the particle discretization; cached per thread.
const SolverTables& tables_for(const FluidParams& params) {
    thread_local std::optional<SolverTables> cache;
    if (!cache || !cache->matches(params)) cache.emplace(params);
    return *cache;
}

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

void validate(const FluidParams& params) {
    if (params.particle_count < 1) throw ConfigError("particle_count must be >= 1");
    if (!(params.timestep > 0.0)) throw ConfigError("timestep must be positive");
    if (params.constraint_iterations < 1) throw ConfigError("constraint_iterations must be >= 1");
    if (!(params.rest_spacing > 0.0)) throw ConfigError("rest_spacing must be positive");
    if (!(params.smoothing_radius > params.rest_spacing)) {
        throw ConfigError("smoothing_radius must exceed rest_spacing");
    }
    if (!(params.wall_friction >= 0.0 && params.wall_friction <= 1.0)) {
        throw ConfigError("wall_friction must lie in [0, 1]");
    }
    if (!(params.sleep_threshold >= 0.0)) throw ConfigError("sleep_threshold must be >= 0");
    if (!(params.viscosity_coeff >= 0.0)) throw ConfigError("viscosity_coeff must be >= 0");
    if (!(params.particle_mass > 0.0)) throw ConfigError("particle_mass must be positive");
}

FluidState spawn(const vessel::VesselProfile& profile, const FluidParams& params) {
    validate(params);
    const double s = params.rest_spacing;
    std::mt19937_64 rng(params.seed);

    FluidState state;
    state.positions.reserve(static_cast<std::size_t>(params.particle_count));
    for (double z = s / 2.0; z <= profile.height() - s / 2.0 &&
                             static_cast<int>(state.positions.size()) < params.particle_count;
         z += s) {
        const double usable = vessel::profile_radius(profile, z) - s / 2.0;
        if (usable < 0.0) continue;
        const int reach = static_cast<int>(std::floor(usable / s));
        std::vector<Vec3> layer;
        for (int i = -reach; i <= reach; ++i) {
            for (int j = -reach; j <= reach; ++j) {
                const Vec3 p{i * s, j * s, z};
                if (radial(p) <= usable) layer.push_back(p);
            }
        }
        std::sort(layer.begin(), layer.end(), [](const Vec3& a, const Vec3& b) {
            const double ra = dot(a, a), rb = dot(b, b);
            if (ra != rb) return ra < rb;
            return std::atan2(a.y, a.x) < std::atan2(b.y, b.x);
        });
        for (const Vec3& p : layer) {
            if (static_cast<int>(state.positions.size()) == params.particle_count) break;
            state.positions.push_back(p);
        }
    }
    if (static_cast<int>(state.positions.size()) < params.particle_count) {
        throw ConfigError("vessel '" + profile.name() + "' holds only " +
                          std::to_string(state.positions.size()) + " particles at spacing " +
                          std::to_string(s));
    }
    const double amp = kJitterFraction * s;
    for (Vec3& p : state.positions) {
        p.x += amp * (2.0 * unit_uniform(rng) - 1.0);
        p.y += amp * (2.0 * unit_uniform(rng) - 1.0);
        p.z += amp * (2.0 * unit_uniform(rng) - 1.0);
    }
    state.velocities.assign(state.positions.size(), Vec3{});
    return state;
}

FluidState step(const FluidState& state, const FluidParams& params,
                const vessel::VesselProfile& profile, const FrameDrive& drive) {
    const std::size_t n = state.positions.size();
    const double dt = params.timestep;
    const SolverTables& tables = tables_for(params);
    const Kernels& kernels = tables.kernels;
    const double rho0 = tables.rest_density;
    const WallTable& walls = tables.walls;
    const double mass_over_rho0 = params.particle_mass / rho0;
    const Vec3 body_force = drive.gravity_local - drive.frame_accel;

    FluidState next;
    next.step_index = state.step_index + 1;
    next.velocities.resize(n);
    next.positions.resize(n);

    std::vector<Vec3>& predicted = next.positions;
    // Inward normal of the most recent wall contact of each particle during this step.
    std::vector<Vec3> contact(n);
    const auto confine = [&](std::size_t i, const Vec3& p) {
        const auto proj = vessel::project_to_boundary(profile, p);
        predicted[i] = proj.point;
        if (proj.corrected) contact[i] = proj.normal;
    };
    for (std::size_t i = 0; i < n; ++i) {
        next.velocities[i] = state.velocities[i] + body_force * dt;
        confine(i, state.positions[i] + next.velocities[i] * dt);
    }

    NeighborGrid grid(profile, params.smoothing_radius);
    grid.build(predicted);
    // Neighbor lists in compressed rows: neighbors of i are flat[offsets[i] .. offsets[i+1]).
    std::vector<int> flat;
    std::vector<std::size_t> offsets(n + 1, 0);
    flat.reserve(n * 40);
    for (std::size_t i = 0; i < n; ++i) {
        grid.neighbors(predicted, i, kernels.h2, flat);
        offsets[i + 1] = flat.size();
    }
    const auto neighbors = [&](std::size_t i) {
        return std::span<const int>(flat.data() + offsets[i], offsets[i + 1] - offsets[i]);
    };

    std::vector<double> lambda(n);
    std::vector<Vec3> delta(n);
    // Per-iteration caches: kernel gradient of every neighbor pair, summed wall gradient.
    std::vector<Vec3> pair_grad(flat.size());
    std::vector<Vec3> wall_grad(n);
    std::array<WallContact, 3> near{};
    for (int iter = 0; iter < params.constraint_iterations; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double density = params.particle_mass * kernels.poly6(0.0);
            Vec3 grad_walls{};
            const int wall_count = nearby_walls(profile, predicted[i], kernels.h, near);
            for (int w = 0; w < wall_count; ++w) {
                density += walls.density(near[w].distance);
                grad_walls += near[w].normal * (walls.gradient(near[w].distance) / rho0);
            }
            wall_grad[i] = grad_walls;
            Vec3 grad_i = grad_walls;
            double grad_sq = 0.0;
            for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
                const Vec3 rij = predicted[i] - predicted[static_cast<std::size_t>(flat[k])];
                const double r2 = dot(rij, rij);
                density += params.particle_mass * kernels.poly6(r2);
                const Vec3 g = kernels.spiky_grad(rij, std::sqrt(r2)) * mass_over_rho0;
                pair_grad[k] = g;
                grad_i += g;
                grad_sq += dot(g, g);
            }
            const double constraint = std::max(density / rho0 - 1.0, 0.0);
            lambda[i] = -constraint / (grad_sq + dot(grad_i, grad_i) + kRelaxation);
        }
        for (std::size_t i = 0; i < n; ++i) {
            Vec3 d = wall_grad[i] * (2.0 * lambda[i]);
            for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
                d += pair_grad[k] * (lambda[i] + lambda[static_cast<std::size_t>(flat[k])]);
            }
            delta[i] = d;
        }
        for (std::size_t i = 0; i < n; ++i) confine(i, predicted[i] + delta[i]);
    }

    for (std::size_t i = 0; i < n; ++i) {
        next.velocities[i] = (predicted[i] - state.positions[i]) / dt;
    }

    // XSPH smoothing toward the kernel-weighted neighbor velocity.
    if (params.viscosity_coeff > 0.0) {
        std::vector<Vec3> smoothed(n);
        for (std::size_t i = 0; i < n; ++i) {
            Vec3 acc{};
            for (int j : neighbors(i)) {
                const Vec3 rij = predicted[i] - predicted[j];
                acc += (next.velocities[j] - next.velocities[i]) *
                       (mass_over_rho0 * kernels.poly6(dot(rij, rij)));
            }
            smoothed[i] = next.velocities[i] + acc * params.viscosity_coeff;
        }
        next.velocities = std::move(smoothed);
    }

    for (std::size_t i = 0; i < n; ++i) {
        // Particles touching a wall lose the velocity component that points outward.
        if (contact[i] != Vec3{}) {
            const double vn = dot(next.velocities[i], contact[i]);
            if (vn < 0.0) next.velocities[i] -= contact[i] * vn;
            const Vec3 tangential = next.velocities[i] - contact[i] * dot(next.velocities[i], contact[i]);
            next.velocities[i] -= tangential * params.wall_friction;
        }
        // Low-energy particles keep their previous position; this removes solver jitter at rest.
        if (0.5 * dot(next.velocities[i], next.velocities[i]) < params.sleep_threshold) {
            predicted[i] = state.positions[i];
            next.velocities[i] = {};
        }
        if (!is_finite(predicted[i]) || !is_finite(next.velocities[i])) {
            throw SimulationFault("non-finite particle " + std::to_string(i), next.step_index);
        }
    }
    return next;
}

Vec3 center_of_gravity(std::span<const Vec3> positions) {
    if (positions.empty()) throw InputError("center_of_gravity of an empty particle set");
    Vec3 sum{};
    for (const Vec3& p : positions) sum += p;
    return sum / static_cast<double>(positions.size());
}

FrameDrive world_to_local_drive(const PoseSample& prev, const PoseSample& curr,
                                const PoseSample& next, double timestep, double gravity) {
    for (const PoseSample* p : {&prev, &curr, &next}) {
        if (std::abs(norm(p->orientation) - 1.0) > 1e-6) {
            throw InputError("pose at t=" + std::to_string(p->t) + " has a non-unit orientation");
        }
    }
    const Vec3 accel_world =
        (next.position - 2.0 * curr.position + prev.position) / (timestep * timestep);
    const Quat to_local = conjugate(curr.orientation);
    return {rotate(to_local, accel_world), rotate(to_local, Vec3{0.0, 0.0, -gravity})};
}

FrameDrive drive_at(std::span<const PoseSample> poses, std::size_t index, double timestep,
                    double gravity) {
    const std::size_t last = poses.size() - 1;
    const PoseSample& curr = poses[index];
    const PoseSample& prev = index == 0 ? curr : poses[index - 1];
    const PoseSample& next = index == last ? curr : poses[index + 1];
    return world_to_local_drive(prev, curr, next, timestep, gravity);
}

void settle(FluidState& state, const FluidParams& params, const vessel::VesselProfile& profile,
            double seconds) {
    const FrameDrive rest{{}, {0.0, 0.0, -params.gravity}};
    const long long steps = std::llround(seconds / params.timestep);
    for (long long k = 0; k < steps; ++k) state = step(state, params, profile, rest);
}

std::vector<CoGSample> run_trajectory(FluidState& state, const FluidParams& params,
                                      const vessel::VesselProfile& profile,
                                      std::span<const PoseSample> poses) {
    std::vector<CoGSample> trace;
    trace.reserve(poses.size());
    for (std::size_t k = 0; k < poses.size(); ++k) {
        state = step(state, params, profile, drive_at(poses, k, params.timestep, params.gravity));
        trace.push_back({poses[k].t, center_of_gravity(state)});
    }
    return trace;
}

}  // namespace vibreau::fluid
