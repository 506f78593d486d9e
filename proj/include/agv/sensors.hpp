#pragma once

#include <vector>

#include "agv/env.hpp"
#include "agv/geom.hpp"
#include "agv/scene.hpp"

namespace agv {

// Per-ray encoding, flattened in this field order: [tag_wall, tag_target,
// hit, distance_frac]. Walls and obstacle boxes share the wall tag (the
// sensor distinguishes only two tags).
struct RayHit {
    double tag_wall = 0.0;
    double tag_target = 0.0;
    double hit = 0.0;
    double distance_frac = 1.0;
};

inline constexpr int kInternalObsDim = 8;
inline constexpr int kRayValueCount = 4;
inline constexpr int kObservationDim = 76;  // 8 + (10 + 7) * 4

// Nearest intersection along `direction` (unit vector) among walls,
// obstacle boxes and the target circle, within max_range.
RayHit cast_ray(Vec2 origin, Vec2 direction, const SceneConfig& scene, const Vec3& target,
                double max_range);

// Ray directions in the XZ plane for both sensors, in emission order:
// the surround sensor starts at +X and sweeps counter-clockwise; the
// forward fan spans its fov centered on +Z (the agent has no heading).
std::vector<Vec2> sensor_directions(const RaySensorConfig& around, const RaySensorConfig& forward);

// 76-dim observation: [agent_pos(3), target_pos(3), vel_x, vel_z] followed
// by surround rays then forward rays, 4 values each.
std::vector<double> build_observation(const WorldState& state, const SceneConfig& scene);

}  // namespace agv
