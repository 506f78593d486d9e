#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "agv/env.hpp"
#include "agv/scene.hpp"

using namespace agv;

TEST_CASE("scene presets match published coordinates") {
    const auto simple = make_scene(ScenePreset::simple_static);
    CHECK(simple.half_extent == 10.0);
    CHECK(simple.max_step == 2000);
    REQUIRE(simple.target_spawns.size() == 1);
    CHECK(simple.target_spawns[0] == Vec3{5.0, 0.5, -1.5});
    CHECK(simple.agent_start == Vec3{-5.0, 0.5, -8.0});

    const auto simple_dyn = make_scene(ScenePreset::simple_dynamic);
    REQUIRE(simple_dyn.target_spawns.size() == 2);
    CHECK(simple_dyn.target_spawns[1] == Vec3{-8.0, 0.5, -1.0});
    CHECK(simple_dyn.max_step == 2000);

    const auto complex = make_scene(ScenePreset::complex_static);
    CHECK(complex.half_extent == 20.0);
    CHECK(complex.max_step == 3000);
    CHECK(complex.agent_start == Vec3{-12.0, 0.5, -16.0});
    REQUIRE(complex.target_spawns.size() == 1);
    CHECK(complex.target_spawns[0] == Vec3{17.0, 0.5, 15.0});

    const auto complex_dyn = make_scene(ScenePreset::complex_dynamic);
    CHECK(complex_dyn.max_step == 4000);
    REQUIRE(complex_dyn.target_spawns.size() == 3);
    CHECK(complex_dyn.target_spawns[0] == Vec3{15.0, 0.5, 2.0});
    CHECK(complex_dyn.target_spawns[1] == Vec3{15.0, 0.5, -17.0});
    CHECK(complex_dyn.target_spawns[2] == Vec3{-17.0, 0.5, 15.0});
}

TEST_CASE("reset: static scene always uses the single spawn") {
    const auto scene = make_scene(ScenePreset::simple_static);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        const auto s = reset(scene, rng);
        CHECK(s.target_pos == scene.target_spawns[0]);
        CHECK(s.agent_pos == scene.agent_start);
        CHECK(s.vel_x == 0.0);
        CHECK(s.vel_z == 0.0);
        CHECK(s.step_count == 0);
    }
}

TEST_CASE("reset: seeded spawn choice is reproducible") {
    const auto scene = make_scene(ScenePreset::simple_dynamic);
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) {
        CHECK(reset(scene, a).target_pos == reset(scene, b).target_pos);
    }
}

TEST_CASE("reset: spawn frequencies within 3 sigma of 1/2") {
    const auto scene = make_scene(ScenePreset::simple_dynamic);
    Rng rng(7);
    const int n = 10000;
    int first = 0;
    for (int i = 0; i < n; ++i) {
        if (reset(scene, rng).target_pos == scene.target_spawns[0]) ++first;
    }
    // binomial: mean n/2, sigma = sqrt(n)/2
    const double sigma = std::sqrt(static_cast<double>(n)) / 2.0;
    CHECK(std::abs(first - n / 2.0) <= 3.0 * sigma);
}

TEST_CASE("step: single-step penalty is -1/MaxStep") {
    const auto scene = make_scene(ScenePreset::simple_static);
    Rng rng(0);
    auto s = reset(scene, rng);
    auto [s2, out] = step(s, {0.0, 0.0}, scene);
    CHECK(out.reward_e == doctest::Approx(-0.0005).epsilon(1e-12));
    CHECK_FALSE(out.terminated);
    CHECK_FALSE(out.truncated);
    CHECK(s2.step_count == 1);
}

TEST_CASE("step: touching the target terminates with reward 5 minus the step penalty") {
    const auto scene = make_scene(ScenePreset::simple_static);
    Rng rng(0);
    auto s = reset(scene, rng);
    s.agent_pos = {scene.target_spawns[0].x - 1.005, 0.5, scene.target_spawns[0].z};
    auto [s2, out] = step(s, {1.0, 0.0}, scene);
    CHECK(out.reward_e == 5.0 - 1.0 / scene.max_step);
    CHECK(out.terminated);
    CHECK_FALSE(out.truncated);
}

TEST_CASE("step: episode reaching target at step k accumulates 5 - k/MaxStep") {
    // drive straight at the target in an obstacle-free scene
    auto scene = make_scene(ScenePreset::simple_static);
    scene.obstacles.clear();
    Rng rng(0);
    auto s = reset(scene, rng);
    double total = 0.0;
    bool reached = false;
    while (!reached) {
        const double dx = s.target_pos.x - s.agent_pos.x;
        const double dz = s.target_pos.z - s.agent_pos.z;
        const double n = std::sqrt(dx * dx + dz * dz);
        auto [s2, out] = step(s, {dx / n, dz / n}, scene);
        s = s2;
        total += out.reward_e;
        reached = out.terminated;
        REQUIRE(s.step_count < 2000);
    }
    const int k = s.step_count;
    CHECK(total == doctest::Approx(5.0 - k / 2000.0).epsilon(1e-12));
    CHECK(k < 500);  // simple map is crossable well inside the budget
}

TEST_CASE("step: truncation at max_step, cumulative reward exactly -1") {
    auto scene = make_scene(ScenePreset::simple_static);
    scene.max_step = 50;  // small budget keeps the test fast
    Rng rng(0);
    auto s = reset(scene, rng);
    double total = 0.0;
    for (int i = 0; i < 50; ++i) {
        auto [s2, out] = step(s, {0.0, 0.0}, scene);
        s = s2;
        total += out.reward_e;
        if (i + 1 < 50) {
            CHECK_FALSE(out.truncated);
        } else {
            CHECK(out.truncated);
        }
    }
    CHECK(total == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK_THROWS_AS(step(s, {0.0, 0.0}, scene), std::logic_error);
}

TEST_CASE("step: stepping a terminated episode throws") {
    const auto scene = make_scene(ScenePreset::simple_static);
    WorldState s;
    s.agent_pos = scene.target_spawns[0];
    s.target_pos = scene.target_spawns[0];
    CHECK_THROWS_AS(step(s, {0.0, 0.0}, scene), std::logic_error);
}

TEST_CASE("integrate: zero action, zero velocity leaves position unchanged") {
    PhysicsParams phys;
    WorldState s;
    s.agent_pos = {1.0, 0.5, 2.0};
    const auto s2 = integrate(s, {0.0, 0.0}, phys);
    CHECK(s2.agent_pos == s.agent_pos);
    CHECK(s2.vel_x == 0.0);
}

TEST_CASE("integrate: one-step closed form for unit action") {
    PhysicsParams phys;
    WorldState s;
    const auto s2 = integrate(s, {1.0, 0.0}, phys);
    const double expected_v = (phys.force_scale / phys.mass) * phys.dt * (1.0 - phys.linear_drag);
    CHECK(s2.vel_x == doctest::Approx(expected_v).epsilon(1e-15));
    CHECK(s2.agent_pos.x == doctest::Approx(expected_v * phys.dt).epsilon(1e-15));
    CHECK(s2.vel_z == 0.0);
}

TEST_CASE("integrate: speed stays capped under constant max action") {
    PhysicsParams phys;
    WorldState s;
    for (int i = 0; i < 1000; ++i) {
        s = integrate(s, {1.0, 1.0}, phys);
        const double speed = std::sqrt(s.vel_x * s.vel_x + s.vel_z * s.vel_z);
        CHECK(speed <= phys.max_speed + 1e-12);
    }
    // the damped update's fixed point exceeds the cap, so the cap binds
    CHECK(std::sqrt(s.vel_x * s.vel_x + s.vel_z * s.vel_z) ==
          doctest::Approx(phys.max_speed).epsilon(1e-9));
}

TEST_CASE("resolve_collisions: wall clamp zeroes normal velocity") {
    const auto scene = make_scene(ScenePreset::simple_static);
    WorldState s;
    s.agent_pos = {10.2, 0.5, 0.0};
    s.vel_x = 3.0;
    s.vel_z = 1.0;
    const auto s2 = resolve_collisions(s, scene);
    CHECK(s2.agent_pos.x == scene.half_extent - scene.agent_radius);
    CHECK(s2.vel_x == 0.0);
    CHECK(s2.vel_z == 1.0);
}

TEST_CASE("resolve_collisions: free space is untouched") {
    const auto scene = make_scene(ScenePreset::simple_static);
    WorldState s;
    s.agent_pos = {3.0, 0.5, 5.0};
    s.vel_x = 1.0;
    s.vel_z = -2.0;
    const auto s2 = resolve_collisions(s, scene);
    CHECK(s2.agent_pos == s.agent_pos);
    CHECK(s2.vel_x == s.vel_x);
    CHECK(s2.vel_z == s.vel_z);
}

TEST_CASE("resolve_collisions: corner contact clamps both axes") {
    const auto scene = make_scene(ScenePreset::simple_static);
    WorldState s;
    s.agent_pos = {10.5, 0.5, 10.5};
    s.vel_x = 2.0;
    s.vel_z = 2.0;
    const auto s2 = resolve_collisions(s, scene);
    CHECK(s2.agent_pos.x == scene.half_extent - scene.agent_radius);
    CHECK(s2.agent_pos.z == scene.half_extent - scene.agent_radius);
    CHECK(s2.vel_x == 0.0);
    CHECK(s2.vel_z == 0.0);
}

TEST_CASE("resolve_collisions: obstacle contact pushes the sphere out") {
    const auto scene = make_scene(ScenePreset::simple_static);
    // box at center (0,-4), half (2.0, 0.5)
    WorldState s;
    s.agent_pos = {0.0, 0.5, -3.2};  // overlaps the +z face (face at z=-3.5)
    s.vel_x = 0.5;
    s.vel_z = -1.0;
    const auto s2 = resolve_collisions(s, scene);
    CHECK(s2.agent_pos.z == doctest::Approx(-3.0).epsilon(1e-12));
    CHECK(s2.vel_z == doctest::Approx(0.0));
    CHECK(s2.vel_x == doctest::Approx(0.5));
}

TEST_CASE("property: identical seed and action sequence give bit-identical trajectories") {
    const auto scene = make_scene(ScenePreset::simple_dynamic);
    for (int run = 0; run < 2; ++run) {
        Rng env_a(42), env_b(42), act_a(9), act_b(9);
        auto sa = reset(scene, env_a);
        auto sb = reset(scene, env_b);
        for (int i = 0; i < 500; ++i) {
            const Action a{act_a.uniform(-1, 1), act_a.uniform(-1, 1)};
            const Action b{act_b.uniform(-1, 1), act_b.uniform(-1, 1)};
            auto [na, oa] = step(sa, a, scene);
            auto [nb, ob] = step(sb, b, scene);
            REQUIRE(na.agent_pos == nb.agent_pos);
            REQUIRE(na.vel_x == nb.vel_x);
            REQUIRE(na.vel_z == nb.vel_z);
            REQUIRE(oa.reward_e == ob.reward_e);
            if (oa.terminated || oa.truncated) {
                sa = reset(scene, env_a);
                sb = reset(scene, env_b);
            } else {
                sa = na;
                sb = nb;
            }
        }
    }
}

TEST_CASE("property: agent always stays inside the walls") {
    const auto scene = make_scene(ScenePreset::complex_dynamic);
    Rng env_rng(3), act_rng(4);
    auto s = reset(scene, env_rng);
    const double inner = scene.half_extent - scene.agent_radius;
    for (int i = 0; i < 5000; ++i) {
        auto [ns, out] = step(s, {act_rng.uniform(-1, 1), act_rng.uniform(-1, 1)}, scene);
        REQUIRE(std::abs(ns.agent_pos.x) <= inner + 1e-12);
        REQUIRE(std::abs(ns.agent_pos.z) <= inner + 1e-12);
        REQUIRE(ns.step_count <= scene.max_step);
        REQUIRE(ns.step_count == s.step_count + 1);
        s = (out.terminated || out.truncated) ? reset(scene, env_rng) : ns;
    }
}

TEST_CASE("property: cumulative extrinsic reward obeys the closed form") {
    auto scene = make_scene(ScenePreset::simple_dynamic);
    scene.max_step = 300;
    Rng env_rng(11), act_rng(12);
    for (int ep = 0; ep < 50; ++ep) {
        auto s = reset(scene, env_rng);
        double total = 0.0;
        bool done = false;
        bool reached = false;
        while (!done) {
            // biased toward the target so some episodes succeed
            double dx = s.target_pos.x - s.agent_pos.x;
            double dz = s.target_pos.z - s.agent_pos.z;
            const double n = std::max(1e-9, std::sqrt(dx * dx + dz * dz));
            const Action a{dx / n * 0.7 + act_rng.uniform(-0.5, 0.5),
                           dz / n * 0.7 + act_rng.uniform(-0.5, 0.5)};
            auto [ns, out] = step(s, a, scene);
            s = ns;
            total += out.reward_e;
            reached = out.terminated;
            done = out.terminated || out.truncated;
        }
        if (reached) {
            CHECK(total == doctest::Approx(5.0 - static_cast<double>(s.step_count) / scene.max_step)
                               .epsilon(1e-12));
        } else {
            CHECK(total == doctest::Approx(-1.0).epsilon(1e-12));
        }
        CHECK(total > -1.0 - 1e-12);
        CHECK(total <= 5.0);
    }
}
