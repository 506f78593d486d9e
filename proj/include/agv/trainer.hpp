#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agv/checkpoint.hpp"
#include "agv/env.hpp"
#include "agv/ppo.hpp"
#include "agv/rnd.hpp"
#include "agv/scene.hpp"

namespace agv {

struct RunConfig {
    std::string scene_preset = "simple_static";
    std::string scene_file;  // when set, overrides the preset
    bool rnd_enabled = true;
    long total_env_steps = 400000;
    std::uint64_t seed = 0;
    int n_envs = 8;  // parallel environment instances; must divide collect_horizon
    PpoConfig ppo;
    int rnd_out_dim = 64;
    int n_pre = 4;          // predictor optimization steps per collect
    double rnd_lr = 1e-4;
    double obs_clip = 5.0;
    double intrinsic_gamma = 0.99;
    bool normalize_extrinsic = false;
    std::string out_dir = "run_out";
    long eval_every = 100000;  // trajectory snapshot cadence; 0 disables
    int n_eval_episodes = 20;

    SceneConfig resolve_scene() const;
};

struct MetricsRow {
    long env_steps = 0;
    long episodes = 0;
    double mean_ext_reward = 0.0;  // rolling mean, last 20 finished episodes
    double mean_ep_len = 0.0;
    double mean_int_reward = 0.0;  // normalized, this collection round
    double clip_frac = 0.0;
    double approx_kl = 0.0;
};

struct TrajectoryRecord {
    long episode = 0;
    int step = 0;
    double agent_x = 0.0;
    double agent_z = 0.0;
    double target_x = 0.0;
    double target_z = 0.0;
    bool terminated = false;
};

struct TrainResult {
    std::vector<MetricsRow> metrics;
    std::vector<TrajectoryRecord> trajectories;
    Checkpoint checkpoint;
    std::string metrics_path;
    std::string trajectories_path;
    std::string checkpoint_path;
};

// Outer loop: collect -> normalize observations -> intrinsic rewards ->
// train predictor -> normalize rewards -> combine -> advantages -> PPO
// update, until total_env_steps. rnd_enabled=false skips the RND stages.
TrainResult run_training(const RunConfig& config);

struct SpawnStats {
    Vec3 spawn;
    int episodes = 0;
    int successes = 0;
    double success_rate() const { return episodes > 0 ? static_cast<double>(successes) / episodes : 0.0; }
};

struct EvalSummary {
    int episodes = 0;
    double success_rate = 0.0;
    double mean_steps_to_target = 0.0;  // over successful episodes
    double mean_ext_reward = 0.0;
    std::vector<SpawnStats> per_spawn;
};

EvalSummary evaluate(const PolicyValueNet& policy, const SceneConfig& scene, int n_episodes,
                     bool deterministic, Rng& rng);

void export_metrics(const std::vector<MetricsRow>& rows, const std::string& path);
std::vector<MetricsRow> load_metrics(const std::string& path);
void export_trajectories(const std::vector<TrajectoryRecord>& rows, const std::string& path);

}  // namespace agv
