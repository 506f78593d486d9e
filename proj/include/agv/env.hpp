#pragma once

#include <utility>

#include "agv/geom.hpp"
#include "agv/rng.hpp"
#include "agv/scene.hpp"

namespace agv {

// Control forces along X and Z, each in [-1,1]. Values outside the range
// are clamped before physics.
struct Action {
    double fx = 0.0;
    double fz = 0.0;
};

struct WorldState {
    Vec3 agent_pos;   // y is fixed at 0.5
    double vel_x = 0.0;
    double vel_z = 0.0;
    Vec3 target_pos;
    int step_count = 0;
};

struct StepOutcome {
    double reward_e = 0.0;
    bool terminated = false;  // target reached
    bool truncated = false;   // step budget exhausted
};

WorldState reset(const SceneConfig& scene, Rng& rng);

// Semi-implicit Euler with per-step damping and a speed cap.
WorldState integrate(const WorldState& state, Action action, const PhysicsParams& physics);

// Projects the agent sphere out of walls and obstacle boxes; the velocity
// component along each contact normal is zeroed.
WorldState resolve_collisions(const WorldState& state, const SceneConfig& scene);

bool target_reached(const WorldState& state, const SceneConfig& scene);

// Throws std::logic_error when called on a finished episode.
std::pair<WorldState, StepOutcome> step(const WorldState& state, Action action,
                                        const SceneConfig& scene);

}  // namespace agv
