#include "agv/sensors.hpp"

#include <cmath>
#include <limits>

namespace agv {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kNoHit = std::numeric_limits<double>::infinity();

// Entry distance of a ray into an axis-aligned box in the XZ plane
// (slab method); an origin already inside yields 0.
double ray_box(Vec2 o, Vec2 d, const Aabb& box) {
    double tmin = 0.0;
    double tmax = kNoHit;
    const double lo[2] = {box.center.x - box.half.x, box.center.z - box.half.z};
    const double hi[2] = {box.center.x + box.half.x, box.center.z + box.half.z};
    const double origin[2] = {o.x, o.z};
    const double dir[2] = {d.x, d.z};
    for (int axis = 0; axis < 2; ++axis) {
        if (dir[axis] == 0.0) {
            if (origin[axis] < lo[axis] || origin[axis] > hi[axis]) return kNoHit;
            continue;
        }
        double t0 = (lo[axis] - origin[axis]) / dir[axis];
        double t1 = (hi[axis] - origin[axis]) / dir[axis];
        if (t0 > t1) std::swap(t0, t1);
        tmin = std::max(tmin, t0);
        tmax = std::min(tmax, t1);
        if (tmin > tmax) return kNoHit;
    }
    return tmin;
}

// Distance to the enclosing square walls, from an origin inside them.
double ray_walls(Vec2 o, Vec2 d, double half_extent) {
    double best = kNoHit;
    const double h = half_extent;
    auto consider = [&](double t, double other) {
        if (t >= 0.0 && t < best && std::abs(other) <= h + 1e-12) best = t;
    };
    if (d.x != 0.0) {
        consider((h - o.x) / d.x, o.z + d.z * (h - o.x) / d.x);
        consider((-h - o.x) / d.x, o.z + d.z * (-h - o.x) / d.x);
    }
    if (d.z != 0.0) {
        consider((h - o.z) / d.z, o.x + d.x * (h - o.z) / d.z);
        consider((-h - o.z) / d.z, o.x + d.x * (-h - o.z) / d.z);
    }
    return best;
}

double ray_circle(Vec2 o, Vec2 d, Vec2 center, double radius) {
    const Vec2 oc = center - o;
    const double oc2 = dot(oc, oc);
    if (oc2 <= radius * radius) return 0.0;
    const double b = dot(d, oc);
    const double disc = b * b - (oc2 - radius * radius);
    if (disc < 0.0) return kNoHit;
    const double t = b - std::sqrt(disc);
    return t >= 0.0 ? t : kNoHit;
}

}  // namespace

RayHit cast_ray(Vec2 origin, Vec2 direction, const SceneConfig& scene, const Vec3& target,
                double max_range) {
    double best = ray_walls(origin, direction, scene.half_extent);
    for (const auto& box : scene.obstacles) {
        best = std::min(best, ray_box(origin, direction, box));
    }
    bool is_target = false;
    const double t_target =
        ray_circle(origin, direction, Vec2{target.x, target.z}, scene.target_radius);
    if (t_target < best) {
        best = t_target;
        is_target = true;
    }

    RayHit hit;
    if (best > max_range) {
        return hit;  // miss: zero tags, distance_frac 1.0
    }
    hit.hit = 1.0;
    hit.tag_wall = is_target ? 0.0 : 1.0;
    hit.tag_target = is_target ? 1.0 : 0.0;
    hit.distance_frac = best / max_range;
    return hit;
}

std::vector<Vec2> sensor_directions(const RaySensorConfig& around, const RaySensorConfig& forward) {
    std::vector<Vec2> dirs;
    dirs.reserve(static_cast<std::size_t>(around.ray_count + forward.ray_count));
    // surround: evenly spaced over the full fov, first ray along +X
    for (int i = 0; i < around.ray_count; ++i) {
        const double theta = kPi / 180.0 * around.fov_degrees * i / around.ray_count;
        dirs.push_back({std::cos(theta), std::sin(theta)});
    }
    // forward fan: centered on +Z, swept from -fov/2 to +fov/2
    for (int i = 0; i < forward.ray_count; ++i) {
        const double span = kPi / 180.0 * forward.fov_degrees;
        const double delta = forward.ray_count == 1
                                 ? 0.0
                                 : -span / 2.0 + span * i / (forward.ray_count - 1);
        dirs.push_back({std::sin(delta), std::cos(delta)});
    }
    return dirs;
}

std::vector<double> build_observation(const WorldState& state, const SceneConfig& scene) {
    std::vector<double> obs;
    obs.reserve(kObservationDim);
    obs.push_back(state.agent_pos.x);
    obs.push_back(state.agent_pos.y);
    obs.push_back(state.agent_pos.z);
    obs.push_back(state.target_pos.x);
    obs.push_back(state.target_pos.y);
    obs.push_back(state.target_pos.z);
    obs.push_back(state.vel_x);
    obs.push_back(state.vel_z);

    const Vec2 origin{state.agent_pos.x, state.agent_pos.z};
    const auto dirs = sensor_directions(scene.sensor_around, scene.sensor_forward);
    for (int i = 0; i < static_cast<int>(dirs.size()); ++i) {
        const double range = i < scene.sensor_around.ray_count ? scene.sensor_around.max_range
                                                               : scene.sensor_forward.max_range;
        const RayHit hit = cast_ray(origin, dirs[static_cast<std::size_t>(i)], scene,
                                    state.target_pos, range);
        obs.push_back(hit.tag_wall);
        obs.push_back(hit.tag_target);
        obs.push_back(hit.hit);
        obs.push_back(hit.distance_frac);
    }
    return obs;
}

}  // namespace agv
