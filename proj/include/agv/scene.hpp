#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "agv/geom.hpp"

namespace agv {

// Step dynamics constants. Fast enough that exploration can reach every
// corner of even the 40x40 complex map well within one episode budget.
struct PhysicsParams {
    double dt = 0.02;           // seconds per step
    double mass = 1.0;
    double force_scale = 80.0;  // force units per unit action
    double linear_drag = 0.05;  // per-step damping in [0,1)
    double max_speed = 25.0;    // hard speed cap
};

struct RaySensorConfig {
    int ray_count = 10;
    double fov_degrees = 360.0;
    double max_range = 20.0;
};

enum class ScenePreset { simple_static, simple_dynamic, complex_static, complex_dynamic };

struct SceneConfig {
    std::string name;
    double half_extent = 10.0;
    Vec3 agent_start;
    std::vector<Vec3> target_spawns;
    std::vector<Aabb> obstacles;
    int max_step = 2000;
    PhysicsParams physics;
    double agent_radius = 0.5;
    double target_radius = 0.5;
    RaySensorConfig sensor_around{10, 360.0, 20.0};   // full surround
    RaySensorConfig sensor_forward{7, 120.0, 20.0};   // dense forward fan

    // Throws std::runtime_error on the first violated invariant.
    void validate() const;
};

SceneConfig make_scene(ScenePreset preset);

std::optional<ScenePreset> parse_preset(std::string_view name);
std::string_view preset_name(ScenePreset preset);

// Plain-text key = value scene files; one `obstacle = cx cy cz hx hy hz`
// line per box. Parse errors carry the offending line number.
SceneConfig load_scene_file(const std::string& path);
void save_scene_file(const SceneConfig& scene, const std::string& path);
SceneConfig parse_scene_text(const std::string& text, const std::string& origin);
std::string scene_to_text(const SceneConfig& scene);

}  // namespace agv
