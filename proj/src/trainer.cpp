#include "agv/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "agv/sensors.hpp"

namespace agv {

namespace {

int scene_obs_dim(const SceneConfig& scene) {
    return kInternalObsDim +
           kRayValueCount * (scene.sensor_around.ray_count + scene.sensor_forward.ray_count);
}

// Network input: raw observation with the world-scale entries brought to
// O(1) — positions by the arena half extent, velocities by the speed cap.
// Ray values are already in [0,1]. Keeps policy conditioning independent of
// map size; the transform is a fixed function of the scene, so checkpoints
// need no extra state.
std::vector<double> policy_observation(const WorldState& state, const SceneConfig& scene) {
    auto obs = build_observation(state, scene);
    const double pos_scale = 1.0 / scene.half_extent;
    const double vel_scale = 1.0 / scene.physics.max_speed;
    for (int i = 0; i < 6; ++i) obs[static_cast<std::size_t>(i)] *= pos_scale;
    obs[6] *= vel_scale;
    obs[7] *= vel_scale;
    return obs;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double rolling_mean(const std::deque<double>& window) {
    if (window.empty()) return 0.0;
    return std::accumulate(window.begin(), window.end(), 0.0) / static_cast<double>(window.size());
}

void push_window(std::deque<double>& window, double v) {
    window.push_back(v);
    if (window.size() > 20) window.pop_front();
}

}  // namespace

SceneConfig RunConfig::resolve_scene() const {
    if (!scene_file.empty()) return load_scene_file(scene_file);
    const auto preset = parse_preset(scene_preset);
    if (!preset) throw std::runtime_error("unknown scene preset: " + scene_preset);
    return make_scene(*preset);
}

TrainResult run_training(const RunConfig& config) {
    SceneConfig scene = config.resolve_scene();
    const int obs_dim = scene_obs_dim(scene);
    if (config.total_env_steps <= 0) throw std::runtime_error("total_env_steps must be positive");

    std::filesystem::create_directories(config.out_dir);

    Rng policy_rng = Rng::stream(config.seed, "policy-sampling");
    Rng policy_init_rng = Rng::stream(config.seed, "policy-init");
    Rng rnd_rng = Rng::stream(config.seed, "rnd-init");
    Rng shuffle_rng = Rng::stream(config.seed, "shuffle");
    Rng snapshot_rng = Rng::stream(config.seed, "eval-snapshot");

    PolicyValueNet net = PolicyValueNet::make(obs_dim, policy_init_rng);
    AdamState opt(net.param_count(), {.lr = config.ppo.learning_rate});
    RunningNormalizer obs_norm(obs_dim, config.obs_clip);
    IntrinsicReturnNormalizer intrinsic_norm(config.intrinsic_gamma);
    IntrinsicReturnNormalizer extrinsic_norm(config.ppo.discount);
    RndModel rnd;
    if (config.rnd_enabled) {
        rnd = RndModel::make(obs_dim, config.rnd_out_dim, rnd_rng, {.lr = config.rnd_lr});
    }

    // Independent environment instances, collected env-major into one batch
    // per round. Decorrelates the update batch: with one environment every
    // batch is a single contiguous trajectory snippet, which destabilizes
    // sparse-reward learning. Each instance owns its reset stream.
    const int n_envs = config.n_envs;
    if (n_envs < 1) throw std::runtime_error("n_envs must be positive");
    if (config.ppo.collect_horizon % n_envs != 0) {
        throw std::runtime_error("collect_horizon must be divisible by n_envs");
    }
    std::vector<Rng> env_rngs;
    std::vector<WorldState> states;
    std::vector<std::vector<double>> env_obs;
    std::vector<double> ep_reward(static_cast<std::size_t>(n_envs), 0.0);
    std::vector<int> ep_len(static_cast<std::size_t>(n_envs), 0);
    for (int e = 0; e < n_envs; ++e) {
        env_rngs.push_back(Rng::stream(config.seed, "env-reset-" + std::to_string(e)));
        states.push_back(reset(scene, env_rngs.back()));
        env_obs.push_back(policy_observation(states.back(), scene));
    }
    long episodes = 0;
    std::deque<double> reward_window;
    std::deque<double> length_window;

    TrainResult result;
    long steps_done = 0;
    long next_snapshot = config.eval_every > 0 ? config.eval_every : -1;
    long snapshot_id = 0;

    const std::size_t horizon = static_cast<std::size_t>(config.ppo.collect_horizon);
    const std::size_t slice = horizon / static_cast<std::size_t>(n_envs);
    Trajectory traj;

    while (steps_done < config.total_env_steps) {
        traj.clear();
        for (int e = 0; e < n_envs; ++e) {
            auto& state = states[static_cast<std::size_t>(e)];
            auto& obs = env_obs[static_cast<std::size_t>(e)];
            for (std::size_t t = 0; t < slice; ++t) {
                const auto eval = net.forward(obs);
                const auto sample = sample_action(eval.policy, policy_rng);
                auto [next_state, outcome] = step(state, sample.clamped, scene);
                auto obs_next = policy_observation(next_state, scene);

                traj.obs.push_back(obs);
                traj.action.push_back(sample.raw);
                traj.log_prob.push_back(sample.log_prob);
                traj.reward_e.push_back(outcome.reward_e);
                traj.reward_i.push_back(0.0);
                traj.value.push_back(eval.value);
                traj.value_next.push_back(0.0);
                traj.terminated.push_back(outcome.terminated ? 1 : 0);
                // a slice that ends mid-episode is a cut for learning
                // purposes: it bootstraps exactly like a truncation
                const bool cut = t + 1 == slice && !outcome.terminated;
                traj.truncated.push_back(outcome.truncated || cut ? 1 : 0);

                ep_reward[static_cast<std::size_t>(e)] += outcome.reward_e;
                ++ep_len[static_cast<std::size_t>(e)];
                if (outcome.terminated || outcome.truncated) {
                    ++episodes;
                    push_window(reward_window, ep_reward[static_cast<std::size_t>(e)]);
                    push_window(length_window,
                                static_cast<double>(ep_len[static_cast<std::size_t>(e)]));
                    ep_reward[static_cast<std::size_t>(e)] = 0.0;
                    ep_len[static_cast<std::size_t>(e)] = 0;
                    state = reset(scene, env_rngs[static_cast<std::size_t>(e)]);
                    traj.obs_next.push_back(std::move(obs_next));
                    obs = policy_observation(state, scene);
                } else {
                    state = next_state;
                    traj.obs_next.push_back(std::move(obs_next));
                    obs = traj.obs_next.back();
                }
            }
        }
        steps_done += static_cast<long>(horizon);

        // fill bootstrap values: reuse the next step's V(s) inside an
        // episode, run an extra forward at truncations and slice cuts
        const std::size_t n = traj.size();
        for (std::size_t t = 0; t < n; ++t) {
            if (traj.terminated[t]) {
                traj.value_next[t] = 0.0;
            } else if (traj.truncated[t]) {
                traj.value_next[t] = net.forward(traj.obs_next[t]).value;
            } else {
                traj.value_next[t] = traj.value[t + 1];
            }
        }

        std::vector<double> r_int_normalized(n, 0.0);
        if (config.rnd_enabled) {
            obs_norm.update(traj.obs_next);
            std::vector<std::vector<double>> normalized;
            normalized.reserve(n);
            for (const auto& o : traj.obs_next) normalized.push_back(obs_norm.normalize(o));
            for (std::size_t t = 0; t < n; ++t) {
                const auto pt = rnd.target.forward(normalized[t]);
                const auto pp = rnd.predictor.forward(normalized[t]);
                double err = 0.0;
                for (std::size_t j = 0; j < pt.size(); ++j) {
                    const double d = pp[j] - pt[j];
                    err += d * d;
                }
                traj.reward_i[t] = err;
            }
            train_predictor(rnd, normalized, config.n_pre);
            r_int_normalized = intrinsic_norm.normalize(traj.reward_i);
            if (steps_done == static_cast<long>(horizon)) {
                // warmup round: the return normalizer's std estimate is
                // still settling and would blow up the first rewards, so
                // this round only seeds the normalizers
                std::fill(r_int_normalized.begin(), r_int_normalized.end(), 0.0);
            }
        }

        std::vector<double> r_ext(traj.reward_e);
        if (config.normalize_extrinsic) r_ext = extrinsic_norm.normalize(r_ext);

        const double beta = config.rnd_enabled ? config.ppo.beta_int : 0.0;
        const auto combined = combine_rewards(r_ext, r_int_normalized, config.ppo.alpha_ext, beta);
        const auto adv = compute_advantages(traj, combined, config.ppo.discount);
        const auto stats = ppo_update(net, opt, traj, adv.advantages, adv.returns, config.ppo,
                                      shuffle_rng);

        MetricsRow row;
        row.env_steps = steps_done;
        row.episodes = episodes;
        row.mean_ext_reward = rolling_mean(reward_window);
        row.mean_ep_len = rolling_mean(length_window);
        row.mean_int_reward =
            std::accumulate(r_int_normalized.begin(), r_int_normalized.end(), 0.0) /
            static_cast<double>(n);
        row.clip_frac = stats.clip_fraction;
        row.approx_kl = stats.approx_kl;
        result.metrics.push_back(row);

        while (next_snapshot > 0 && steps_done >= next_snapshot) {
            // one deterministic rollout with the current policy, for
            // trajectory plots
            WorldState es = reset(scene, snapshot_rng);
            bool done = false;
            int step_idx = 0;
            result.trajectories.push_back({snapshot_id, step_idx, es.agent_pos.x, es.agent_pos.z,
                                           es.target_pos.x, es.target_pos.z, false});
            while (!done) {
                const auto eval = net.forward(policy_observation(es, scene));
                const Action a{std::clamp(eval.policy.mean[0], -1.0, 1.0),
                               std::clamp(eval.policy.mean[1], -1.0, 1.0)};
                auto [ns, outcome] = step(es, a, scene);
                es = ns;
                ++step_idx;
                result.trajectories.push_back({snapshot_id, step_idx, es.agent_pos.x, es.agent_pos.z,
                                               es.target_pos.x, es.target_pos.z,
                                               outcome.terminated});
                done = outcome.terminated || outcome.truncated;
            }
            ++snapshot_id;
            next_snapshot += config.eval_every;
        }
    }

    result.checkpoint.obs_dim = obs_dim;
    result.checkpoint.policy = net;
    result.checkpoint.has_rnd = config.rnd_enabled;
    if (config.rnd_enabled) result.checkpoint.rnd = rnd;
    result.checkpoint.obs_norm = obs_norm;
    result.checkpoint.intrinsic_norm = intrinsic_norm;

    const std::filesystem::path out(config.out_dir);
    result.metrics_path = (out / "metrics.csv").string();
    result.trajectories_path = (out / "trajectories.csv").string();
    result.checkpoint_path = (out / "checkpoint.bin").string();
    export_metrics(result.metrics, result.metrics_path);
    export_trajectories(result.trajectories, result.trajectories_path);
    save_checkpoint(result.checkpoint, result.checkpoint_path);
    return result;
}

EvalSummary evaluate(const PolicyValueNet& policy, const SceneConfig& scene, int n_episodes,
                     bool deterministic, Rng& rng) {
    if (scene_obs_dim(scene) != policy.trunk.input_dim()) {
        throw std::runtime_error("evaluate: checkpoint incompatible with scene observation size");
    }
    EvalSummary summary;
    summary.per_spawn.reserve(scene.target_spawns.size());
    for (const auto& s : scene.target_spawns) summary.per_spawn.push_back({s, 0, 0});

    double total_reward = 0.0;
    long total_success_steps = 0;
    int successes = 0;
    for (int e = 0; e < n_episodes; ++e) {
        WorldState state = reset(scene, rng);
        std::size_t spawn_idx = 0;
        for (std::size_t i = 0; i < scene.target_spawns.size(); ++i) {
            if (scene.target_spawns[i] == state.target_pos) spawn_idx = i;
        }
        summary.per_spawn[spawn_idx].episodes += 1;

        double ep_reward = 0.0;
        bool done = false;
        bool reached = false;
        while (!done) {
            const auto eval = policy.forward(policy_observation(state, scene));
            Action a;
            if (deterministic) {
                a = {std::clamp(eval.policy.mean[0], -1.0, 1.0),
                     std::clamp(eval.policy.mean[1], -1.0, 1.0)};
            } else {
                a = sample_action(eval.policy, rng).clamped;
            }
            auto [ns, outcome] = step(state, a, scene);
            state = ns;
            ep_reward += outcome.reward_e;
            reached = outcome.terminated;
            done = outcome.terminated || outcome.truncated;
        }
        total_reward += ep_reward;
        if (reached) {
            ++successes;
            total_success_steps += state.step_count;
            summary.per_spawn[spawn_idx].successes += 1;
        }
    }
    summary.episodes = n_episodes;
    if (n_episodes > 0) {
        summary.success_rate = static_cast<double>(successes) / n_episodes;
        summary.mean_ext_reward = total_reward / n_episodes;
        summary.mean_steps_to_target =
            successes > 0 ? static_cast<double>(total_success_steps) / successes : 0.0;
    }
    return summary;
}

void export_metrics(const std::vector<MetricsRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write metrics: " + path);
    out << "env_steps,episodes,mean_ext_reward,mean_ep_len,mean_int_reward,clip_frac,approx_kl\n";
    for (const auto& r : rows) {
        out << r.env_steps << ',' << r.episodes << ',' << fmt(r.mean_ext_reward) << ','
            << fmt(r.mean_ep_len) << ',' << fmt(r.mean_int_reward) << ',' << fmt(r.clip_frac)
            << ',' << fmt(r.approx_kl) << '\n';
    }
    if (!out) throw std::runtime_error("metrics write failed: " + path);
}

std::vector<MetricsRow> load_metrics(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open metrics: " + path);
    std::string line;
    if (!std::getline(in, line) ||
        line != "env_steps,episodes,mean_ext_reward,mean_ep_len,mean_int_reward,clip_frac,approx_kl") {
        throw std::runtime_error("metrics: unexpected header: " + path);
    }
    std::vector<MetricsRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        MetricsRow r;
        char comma;
        if (!(ls >> r.env_steps >> comma >> r.episodes >> comma >> r.mean_ext_reward >> comma >>
              r.mean_ep_len >> comma >> r.mean_int_reward >> comma >> r.clip_frac >> comma >>
              r.approx_kl)) {
            throw std::runtime_error("metrics: bad row in " + path);
        }
        rows.push_back(r);
    }
    return rows;
}

void export_trajectories(const std::vector<TrajectoryRecord>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trajectories: " + path);
    out << "episode,step,agent_x,agent_z,target_x,target_z,terminated\n";
    for (const auto& r : rows) {
        out << r.episode << ',' << r.step << ',' << fmt(r.agent_x) << ',' << fmt(r.agent_z) << ','
            << fmt(r.target_x) << ',' << fmt(r.target_z) << ',' << (r.terminated ? 1 : 0) << '\n';
    }
    if (!out) throw std::runtime_error("trajectories write failed: " + path);
}

}  // namespace agv
