#include "vibreau/vessel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "vibreau/errors.hpp"

namespace vibreau::vessel {

namespace {

constexpr double kVesselHeight = 0.165;
constexpr double kBottomRadius = 0.0625;
constexpr double kTopRadius = 0.020;
constexpr double kBellyRadius = 0.080;

}  // namespace

VesselProfile::VesselProfile(std::string name, double height, std::vector<Knot> knots,
                             double shell_thickness)
    : name_(std::move(name)),
      height_(height),
      knots_(std::move(knots)),
      shell_thickness_(shell_thickness) {
    if (!(height_ > 0.0) || !std::isfinite(height_)) {
        throw ConfigError("vessel '" + name_ + "': height must be positive");
    }
    if (knots_.size() < 2) {
        throw ConfigError("vessel '" + name_ + "': at least two knots required");
    }
    if (knots_.front().z != 0.0 || knots_.back().z != height_) {
        throw ConfigError("vessel '" + name_ + "': knots must span [0, height]");
    }
    for (std::size_t i = 0; i < knots_.size(); ++i) {
        if (!(knots_[i].radius > 0.0) || !std::isfinite(knots_[i].radius)) {
            throw ConfigError("vessel '" + name_ + "': radii must be positive");
        }
        if (i > 0 && !(knots_[i].z > knots_[i - 1].z)) {
            throw ConfigError("vessel '" + name_ + "': knot heights must be strictly increasing");
        }
    }
}

double VesselProfile::min_radius() const noexcept {
    return std::min_element(knots_.begin(), knots_.end(),
                            [](const Knot& a, const Knot& b) { return a.radius < b.radius; })
        ->radius;
}

double VesselProfile::max_radius() const noexcept {
    return std::max_element(knots_.begin(), knots_.end(),
                            [](const Knot& a, const Knot& b) { return a.radius < b.radius; })
        ->radius;
}

double VesselProfile::volume() const noexcept {
    double v = 0.0;
    for (std::size_t i = 1; i < knots_.size(); ++i) {
        const double h = knots_[i].z - knots_[i - 1].z;
        const double r0 = knots_[i - 1].radius;
        const double r1 = knots_[i].radius;
        v += std::numbers::pi * h * (r0 * r0 + r0 * r1 + r1 * r1) / 3.0;
    }
    return v;
}

VesselProfile beaker() {
    return {"beaker", kVesselHeight, {{0.0, kBottomRadius}, {kVesselHeight, kBottomRadius}}};
}

VesselProfile erlen() {
    return {"erlen", kVesselHeight, {{0.0, kBottomRadius}, {kVesselHeight, kTopRadius}}};
}

VesselProfile florence() {
    return {"florence",
            kVesselHeight,
            {{0.0, kBottomRadius}, {kVesselHeight / 2.0, kBellyRadius}, {kVesselHeight, kTopRadius}}};
}

VesselProfile builtin_profile(std::string_view name) {
    if (name == "beaker") return beaker();
    if (name == "erlen") return erlen();
    if (name == "florence") return florence();
    throw ConfigError("unknown vessel '" + std::string(name) + "'");
}

VesselProfile profile_from_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
        std::vector<Knot> knots;
        for (const auto& k : doc.at("knots")) {
            knots.push_back({k.at(0).get<double>(), k.at(1).get<double>()});
        }
        return {doc.at("name").get<std::string>(), doc.at("height").get<double>(), std::move(knots),
                doc.value("shell_thickness", 0.002)};
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("vessel profile: ") + e.what());
    }
}

std::string profile_to_json(const VesselProfile& profile) {
    nlohmann::json knots = nlohmann::json::array();
    for (const auto& k : profile.knots()) knots.push_back({k.z, k.radius});
    nlohmann::json doc{{"name", profile.name()},
                       {"height", profile.height()},
                       {"knots", knots},
                       {"shell_thickness", profile.shell_thickness()}};
    return doc.dump();
}

double profile_radius(const VesselProfile& profile, double z) {
    if (!(z >= 0.0 && z <= profile.height())) {
        throw DomainError("profile_radius: z=" + std::to_string(z) + " outside [0, " +
                          std::to_string(profile.height()) + "]");
    }
    const auto& knots = profile.knots();
    auto upper = std::upper_bound(knots.begin(), knots.end(), z,
                                  [](double value, const Knot& k) { return value < k.z; });
    if (upper == knots.end()) return knots.back().radius;
    const Knot& hi = *upper;
    const Knot& lo = *(upper - 1);
    const double t = (z - lo.z) / (hi.z - lo.z);
    return lo.radius + t * (hi.radius - lo.radius);
}

bool contains(const VesselProfile& profile, const Vec3& p) {
    if (!(p.z >= 0.0 && p.z <= profile.height())) return false;
    return radial(p) <= profile_radius(profile, p.z);
}

BoundaryProjection project_to_boundary(const VesselProfile& profile, const Vec3& p) {
    BoundaryProjection out{p, {}, false};
    Vec3 normal_sum{};
    if (p.z < 0.0) {
        out.point.z = 0.0;
        normal_sum.z += 1.0;
    } else if (p.z > profile.height()) {
        out.point.z = profile.height();
        normal_sum.z -= 1.0;
    }
    const double wall = profile_radius(profile, out.point.z);
    const double r = radial(out.point);
    if (r > wall) {
        Vec3 dir{1.0, 0.0, 0.0};
        if (r > 0.0 && std::isfinite(r)) dir = {out.point.x / r, out.point.y / r, 0.0};
        out.point.x = dir.x * wall;
        out.point.y = dir.y * wall;
        normal_sum -= dir;
    }
    if (normal_sum != Vec3{}) {
        out.corrected = true;
        out.normal = normal_sum / norm(normal_sum);
    }
    return out;
}

bool is_supported_motor_count(int motor_count) {
    return motor_count == 4 || motor_count == 6 || motor_count == 8;
}

double ActuatorLayout::azimuth(int motor) const {
    return 2.0 * std::numbers::pi * motor / motor_count;
}

ActuatorLayout layout_actuators(const VesselProfile& profile, int motor_count, double ring_height,
                                double anchor_height, double anchor_radius_fraction,
                                Mounting mounting) {
    if (!is_supported_motor_count(motor_count)) {
        throw ConfigError("unsupported motor count " + std::to_string(motor_count) +
                          " (expected 4, 6 or 8)");
    }
    const auto in_range = [&](double z) { return z >= 0.0 && z <= profile.height(); };
    if (!in_range(ring_height) || !in_range(anchor_height)) {
        throw ConfigError("ring and anchor heights must lie within the vessel");
    }
    if (!(anchor_radius_fraction > 0.0 && anchor_radius_fraction <= 1.0)) {
        throw ConfigError("anchor radius fraction must lie in (0, 1]");
    }

    ActuatorLayout layout;
    layout.motor_count = motor_count;
    layout.ring_height = ring_height;
    layout.anchor_height = anchor_height;
    layout.anchor_radius = anchor_radius_fraction * profile_radius(profile, anchor_height);
    layout.mounting = mounting;

    const double ring_radius = profile_radius(profile, ring_height);
    for (int k = 0; k < motor_count; ++k) {
        const double phi = layout.azimuth(k);
        const double c = std::cos(phi);
        const double s = std::sin(phi);
        layout.motor_positions.push_back({ring_radius * c, ring_radius * s, ring_height});
        layout.anchor_positions.push_back(
            {layout.anchor_radius * c, layout.anchor_radius * s, anchor_height});
    }
    return layout;
}

}  // namespace vibreau::vessel
