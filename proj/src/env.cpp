#include "agv/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace agv {

WorldState reset(const SceneConfig& scene, Rng& rng) {
    WorldState s;
    s.agent_pos = scene.agent_start;
    s.agent_pos.y = 0.5;
    s.vel_x = 0.0;
    s.vel_z = 0.0;
    s.target_pos = scene.target_spawns[rng.uniform_index(scene.target_spawns.size())];
    s.step_count = 0;
    return s;
}

WorldState integrate(const WorldState& state, Action action, const PhysicsParams& physics) {
    const double fx = std::clamp(action.fx, -1.0, 1.0);
    const double fz = std::clamp(action.fz, -1.0, 1.0);
    WorldState s = state;
    const double accel = physics.force_scale / physics.mass;
    s.vel_x = (s.vel_x + accel * fx * physics.dt) * (1.0 - physics.linear_drag);
    s.vel_z = (s.vel_z + accel * fz * physics.dt) * (1.0 - physics.linear_drag);
    const double speed = std::sqrt(s.vel_x * s.vel_x + s.vel_z * s.vel_z);
    if (speed > physics.max_speed) {
        const double k = physics.max_speed / speed;
        s.vel_x *= k;
        s.vel_z *= k;
    }
    s.agent_pos.x += s.vel_x * physics.dt;
    s.agent_pos.z += s.vel_z * physics.dt;
    return s;
}

WorldState resolve_collisions(const WorldState& state, const SceneConfig& scene) {
    WorldState s = state;
    const double r = scene.agent_radius;

    for (const auto& box : scene.obstacles) {
        const double cx = std::clamp(s.agent_pos.x, box.center.x - box.half.x, box.center.x + box.half.x);
        const double cz = std::clamp(s.agent_pos.z, box.center.z - box.half.z, box.center.z + box.half.z);
        const double dx = s.agent_pos.x - cx;
        const double dz = s.agent_pos.z - cz;
        const double d2 = dx * dx + dz * dz;
        if (d2 >= r * r) continue;
        if (d2 > 0.0) {
            // center outside the box: push along the closest-point normal
            const double d = std::sqrt(d2);
            const double nx = dx / d;
            const double nz = dz / d;
            s.agent_pos.x = cx + nx * r;
            s.agent_pos.z = cz + nz * r;
            const double vn = s.vel_x * nx + s.vel_z * nz;
            s.vel_x -= vn * nx;
            s.vel_z -= vn * nz;
        } else {
            // center inside the box: exit along the axis of least penetration
            const double pen_x_pos = (box.center.x + box.half.x + r) - s.agent_pos.x;
            const double pen_x_neg = s.agent_pos.x - (box.center.x - box.half.x - r);
            const double pen_z_pos = (box.center.z + box.half.z + r) - s.agent_pos.z;
            const double pen_z_neg = s.agent_pos.z - (box.center.z - box.half.z - r);
            const double m = std::min({pen_x_pos, pen_x_neg, pen_z_pos, pen_z_neg});
            if (m == pen_x_pos) { s.agent_pos.x += pen_x_pos; s.vel_x = 0.0; }
            else if (m == pen_x_neg) { s.agent_pos.x -= pen_x_neg; s.vel_x = 0.0; }
            else if (m == pen_z_pos) { s.agent_pos.z += pen_z_pos; s.vel_z = 0.0; }
            else { s.agent_pos.z -= pen_z_neg; s.vel_z = 0.0; }
        }
    }

    const double inner = scene.half_extent - r;
    if (s.agent_pos.x > inner) { s.agent_pos.x = inner; s.vel_x = 0.0; }
    if (s.agent_pos.x < -inner) { s.agent_pos.x = -inner; s.vel_x = 0.0; }
    if (s.agent_pos.z > inner) { s.agent_pos.z = inner; s.vel_z = 0.0; }
    if (s.agent_pos.z < -inner) { s.agent_pos.z = -inner; s.vel_z = 0.0; }
    return s;
}

bool target_reached(const WorldState& state, const SceneConfig& scene) {
    return planar_distance(state.agent_pos, state.target_pos) <=
           scene.agent_radius + scene.target_radius;
}

std::pair<WorldState, StepOutcome> step(const WorldState& state, Action action,
                                        const SceneConfig& scene) {
    if (state.step_count >= scene.max_step || target_reached(state, scene)) {
        throw std::logic_error("step() called on a finished episode");
    }
    WorldState s = integrate(state, action, scene.physics);
    s = resolve_collisions(s, scene);
    s.step_count = state.step_count + 1;

    // the survival penalty applies to every step, so an episode that ends by
    // contact at step k accumulates exactly 5 - k/MaxStep and a truncated
    // one exactly -1
    StepOutcome out;
    out.reward_e = -1.0 / static_cast<double>(scene.max_step);
    if (target_reached(s, scene)) {
        out.reward_e += 5.0;
        out.terminated = true;
    } else {
        out.truncated = (s.step_count >= scene.max_step);
    }
    return {s, out};
}

}  // namespace agv
