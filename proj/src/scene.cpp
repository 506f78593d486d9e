#include "agv/scene.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace agv {

namespace {

bool point_in_box_xz(const Vec3& p, const Aabb& box, double pad) {
    return std::abs(p.x - box.center.x) <= box.half.x + pad &&
           std::abs(p.z - box.center.z) <= box.half.z + pad;
}

}  // namespace

void SceneConfig::validate() const {
    auto fail = [](const std::string& msg) { throw std::runtime_error("scene: " + msg); };
    if (half_extent <= 0.0) fail("half_extent must be positive");
    if (max_step <= 0) fail("max_step must be positive");
    if (target_spawns.empty()) fail("at least one target spawn required");
    if (physics.dt <= 0.0) fail("dt must be positive");
    if (physics.mass <= 0.0) fail("mass must be positive");
    if (physics.force_scale <= 0.0) fail("force_scale must be positive");
    if (physics.max_speed <= 0.0) fail("max_speed must be positive");
    if (physics.linear_drag < 0.0 || physics.linear_drag >= 1.0) fail("linear_drag must be in [0,1)");
    if (sensor_around.ray_count < 1 || sensor_forward.ray_count < 1) fail("ray_count must be >= 1");
    if (sensor_around.max_range <= 0.0 || sensor_forward.max_range <= 0.0) fail("sensor max_range must be positive");

    const double inner = half_extent - agent_radius;
    auto check_inside = [&](const Vec3& p, const std::string& what) {
        if (std::abs(p.x) >= inner || std::abs(p.z) >= inner)
            fail(what + " lies outside walls (clearance < agent_radius)");
    };
    check_inside(agent_start, "agent_start");
    for (const auto& spawn : target_spawns) {
        check_inside(spawn, "target spawn");
        for (const auto& box : obstacles) {
            if (point_in_box_xz(spawn, box, target_radius))
                fail("target spawn intersects an obstacle");
        }
    }
}

SceneConfig make_scene(ScenePreset preset) {
    SceneConfig s;
    s.name = std::string(preset_name(preset));
    switch (preset) {
        case ScenePreset::simple_static:
        case ScenePreset::simple_dynamic:
            s.half_extent = 10.0;
            s.agent_start = {-5.0, 0.5, -8.0};
            s.max_step = 2000;
            s.sensor_around.max_range = 20.0;
            s.sensor_forward.max_range = 20.0;
            s.obstacles = {
                {{0.0, 0.5, -4.0}, {2.0, 0.5, 0.5}},
                {{-3.0, 0.5, 3.0}, {0.5, 0.5, 2.0}},
            };
            if (preset == ScenePreset::simple_static) {
                s.target_spawns = {{5.0, 0.5, -1.5}};
            } else {
                s.target_spawns = {{5.0, 0.5, -1.5}, {-8.0, 0.5, -1.0}};
            }
            break;
        case ScenePreset::complex_static:
        case ScenePreset::complex_dynamic:
            s.half_extent = 20.0;
            s.agent_start = {-12.0, 0.5, -16.0};
            s.sensor_around.max_range = 40.0;
            s.sensor_forward.max_range = 40.0;
            s.obstacles = {
                {{0.0, 0.5, -10.0}, {3.0, 0.5, 1.0}},
                {{-10.0, 0.5, 0.0}, {1.0, 0.5, 3.0}},
                {{8.0, 0.5, -5.0}, {1.0, 0.5, 4.0}},
                {{0.0, 0.5, 8.0}, {4.0, 0.5, 1.0}},
                {{12.0, 0.5, 10.0}, {1.0, 0.5, 3.0}},
                {{-4.0, 0.5, -14.0}, {2.0, 0.5, 1.0}},
            };
            if (preset == ScenePreset::complex_static) {
                s.max_step = 3000;
                s.target_spawns = {{17.0, 0.5, 15.0}};
            } else {
                s.max_step = 4000;
                s.target_spawns = {{15.0, 0.5, 2.0}, {15.0, 0.5, -17.0}, {-17.0, 0.5, 15.0}};
            }
            break;
    }
    s.validate();
    return s;
}

std::optional<ScenePreset> parse_preset(std::string_view name) {
    if (name == "simple_static") return ScenePreset::simple_static;
    if (name == "simple_dynamic") return ScenePreset::simple_dynamic;
    if (name == "complex_static") return ScenePreset::complex_static;
    if (name == "complex_dynamic") return ScenePreset::complex_dynamic;
    return std::nullopt;
}

std::string_view preset_name(ScenePreset preset) {
    switch (preset) {
        case ScenePreset::simple_static: return "simple_static";
        case ScenePreset::simple_dynamic: return "simple_dynamic";
        case ScenePreset::complex_static: return "complex_static";
        case ScenePreset::complex_dynamic: return "complex_dynamic";
    }
    return "?";
}

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

[[noreturn]] void parse_fail(const std::string& origin, int line, const std::string& msg) {
    throw std::runtime_error(origin + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

std::string scene_to_text(const SceneConfig& s) {
    std::ostringstream out;
    out << "# agv scene (lengths in world units, angles in degrees)\n";
    out << "name = " << s.name << "\n";
    out << "half_extent = " << format_double(s.half_extent) << "\n";
    out << "agent_start = " << format_double(s.agent_start.x) << " " << format_double(s.agent_start.y)
        << " " << format_double(s.agent_start.z) << "\n";
    for (const auto& t : s.target_spawns)
        out << "target_spawn = " << format_double(t.x) << " " << format_double(t.y) << " "
            << format_double(t.z) << "\n";
    out << "max_step = " << s.max_step << "\n";
    out << "agent_radius = " << format_double(s.agent_radius) << "\n";
    out << "target_radius = " << format_double(s.target_radius) << "\n";
    out << "dt = " << format_double(s.physics.dt) << "\n";
    out << "mass = " << format_double(s.physics.mass) << "\n";
    out << "force_scale = " << format_double(s.physics.force_scale) << "\n";
    out << "linear_drag = " << format_double(s.physics.linear_drag) << "\n";
    out << "max_speed = " << format_double(s.physics.max_speed) << "\n";
    out << "sensor_around = " << s.sensor_around.ray_count << " "
        << format_double(s.sensor_around.fov_degrees) << " "
        << format_double(s.sensor_around.max_range) << "\n";
    out << "sensor_forward = " << s.sensor_forward.ray_count << " "
        << format_double(s.sensor_forward.fov_degrees) << " "
        << format_double(s.sensor_forward.max_range) << "\n";
    for (const auto& b : s.obstacles)
        out << "obstacle = " << format_double(b.center.x) << " " << format_double(b.center.y) << " "
            << format_double(b.center.z) << " " << format_double(b.half.x) << " "
            << format_double(b.half.y) << " " << format_double(b.half.z) << "\n";
    return out.str();
}

SceneConfig parse_scene_text(const std::string& text, const std::string& origin) {
    SceneConfig s;
    s.target_spawns.clear();
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    bool saw_any = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
            if (!blank) parse_fail(origin, line_no, "expected `key = value`");
            continue;
        }
        auto trim = [](std::string v) {
            const auto a = v.find_first_not_of(" \t\r");
            const auto b = v.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : v.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        std::istringstream vs(value);
        auto want = [&](auto& field) {
            if (!(vs >> field)) parse_fail(origin, line_no, "bad value for `" + key + "`");
        };
        saw_any = true;
        if (key == "name") {
            s.name = value;
        } else if (key == "half_extent") {
            want(s.half_extent);
        } else if (key == "agent_start") {
            want(s.agent_start.x); want(s.agent_start.y); want(s.agent_start.z);
        } else if (key == "target_spawn") {
            Vec3 t;
            want(t.x); want(t.y); want(t.z);
            s.target_spawns.push_back(t);
        } else if (key == "max_step") {
            want(s.max_step);
        } else if (key == "agent_radius") {
            want(s.agent_radius);
        } else if (key == "target_radius") {
            want(s.target_radius);
        } else if (key == "dt") {
            want(s.physics.dt);
        } else if (key == "mass") {
            want(s.physics.mass);
        } else if (key == "force_scale") {
            want(s.physics.force_scale);
        } else if (key == "linear_drag") {
            want(s.physics.linear_drag);
        } else if (key == "max_speed") {
            want(s.physics.max_speed);
        } else if (key == "sensor_around") {
            want(s.sensor_around.ray_count); want(s.sensor_around.fov_degrees); want(s.sensor_around.max_range);
        } else if (key == "sensor_forward") {
            want(s.sensor_forward.ray_count); want(s.sensor_forward.fov_degrees); want(s.sensor_forward.max_range);
        } else if (key == "obstacle") {
            Aabb b;
            want(b.center.x); want(b.center.y); want(b.center.z);
            want(b.half.x); want(b.half.y); want(b.half.z);
            s.obstacles.push_back(b);
        } else {
            parse_fail(origin, line_no, "unknown key `" + key + "`");
        }
    }
    if (!saw_any) parse_fail(origin, line_no, "empty scene file");
    try {
        s.validate();
    } catch (const std::exception& e) {
        throw std::runtime_error(origin + ": " + e.what());
    }
    return s;
}

SceneConfig load_scene_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scene file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scene_text(buf.str(), path);
}

void save_scene_file(const SceneConfig& scene, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write scene file: " + path);
    out << scene_to_text(scene);
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace agv
