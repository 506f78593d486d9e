#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "agv/checkpoint.hpp"
#include "agv/scene.hpp"
#include "agv/trainer.hpp"

namespace {

// key = value file with keys matching RunConfig field names
void apply_config_file(agv::RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key = value");
        }
        auto trim = [](std::string v) {
            const auto a = v.find_first_not_of(" \t\r");
            const auto b = v.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : v.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        std::istringstream vs(value);
        auto num = [&](auto& field) {
            if (!(vs >> field)) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad value for " + key);
            }
        };
        auto flag = [&](bool& field) {
            if (value == "true" || value == "on" || value == "1") field = true;
            else if (value == "false" || value == "off" || value == "0") field = false;
            else throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad bool for " + key);
        };
        if (key == "scene_preset") cfg.scene_preset = value;
        else if (key == "scene_file") cfg.scene_file = value;
        else if (key == "rnd_enabled") flag(cfg.rnd_enabled);
        else if (key == "total_env_steps") num(cfg.total_env_steps);
        else if (key == "seed") num(cfg.seed);
        else if (key == "out_dir") cfg.out_dir = value;
        else if (key == "eval_every") num(cfg.eval_every);
        else if (key == "n_eval_episodes") num(cfg.n_eval_episodes);
        else if (key == "rnd_out_dim") num(cfg.rnd_out_dim);
        else if (key == "n_pre") num(cfg.n_pre);
        else if (key == "n_envs") num(cfg.n_envs);
        else if (key == "rnd_lr") num(cfg.rnd_lr);
        else if (key == "obs_clip") num(cfg.obs_clip);
        else if (key == "intrinsic_gamma") num(cfg.intrinsic_gamma);
        else if (key == "normalize_extrinsic") flag(cfg.normalize_extrinsic);
        else if (key == "discount") num(cfg.ppo.discount);
        else if (key == "clip_eps") num(cfg.ppo.clip_eps);
        else if (key == "epochs") num(cfg.ppo.epochs);
        else if (key == "minibatch_size") num(cfg.ppo.minibatch_size);
        else if (key == "collect_horizon") num(cfg.ppo.collect_horizon);
        else if (key == "alpha_ext") num(cfg.ppo.alpha_ext);
        else if (key == "beta_int") num(cfg.ppo.beta_int);
        else if (key == "value_coef") num(cfg.ppo.value_coef);
        else if (key == "entropy_coef") num(cfg.ppo.entropy_coef);
        else if (key == "learning_rate") num(cfg.ppo.learning_rate);
        else throw std::runtime_error(path + ":" + std::to_string(line_no) + ": unknown key " + key);
    }
}

int run(int argc, char** argv) {
    CLI::App app{"RND-PPO trainer for continuous-action AGV navigation"};
    app.require_subcommand(1);

    agv::RunConfig cfg;
    std::string config_file;
    std::string rnd_flag = "on";

    auto* train = app.add_subcommand("train", "train a policy");
    train->add_option("--scene", cfg.scene_preset,
                      "scene preset: simple_static|simple_dynamic|complex_static|complex_dynamic");
    train->add_option("--scene-file", cfg.scene_file, "scene file (overrides --scene)");
    train->add_option("--rnd", rnd_flag, "on|off: enable RND intrinsic rewards")
        ->check(CLI::IsMember({"on", "off"}));
    train->add_option("--steps", cfg.total_env_steps, "total environment steps");
    train->add_option("--seed", cfg.seed, "master seed");
    train->add_option("--out", cfg.out_dir, "output directory");
    train->add_option("--config", config_file, "config file (CLI options override it)");
    train->add_option("--eval-every", cfg.eval_every, "trajectory snapshot cadence in steps");
    train->add_option("--lr", cfg.ppo.learning_rate, "policy learning rate");
    train->add_option("--discount", cfg.ppo.discount, "reward discount");
    train->add_option("--clip-eps", cfg.ppo.clip_eps, "PPO clip epsilon");
    train->add_option("--epochs", cfg.ppo.epochs, "PPO epochs per update");
    train->add_option("--minibatch", cfg.ppo.minibatch_size, "minibatch size");
    train->add_option("--horizon", cfg.ppo.collect_horizon, "steps collected per update");
    train->add_option("--alpha-ext", cfg.ppo.alpha_ext, "extrinsic reward weight");
    train->add_option("--beta-int", cfg.ppo.beta_int, "intrinsic reward weight");
    train->add_option("--value-coef", cfg.ppo.value_coef, "critic loss weight");
    train->add_option("--entropy-coef", cfg.ppo.entropy_coef, "entropy bonus weight");
    train->add_option("--n-pre", cfg.n_pre, "predictor optimization steps per collect");
    train->add_option("--n-envs", cfg.n_envs, "parallel environment instances");
    train->add_option("--rnd-lr", cfg.rnd_lr, "predictor learning rate");
    train->add_option("--rnd-out-dim", cfg.rnd_out_dim, "RND embedding size");
    train->add_flag("--normalize-extrinsic", cfg.normalize_extrinsic,
                    "divide extrinsic rewards by running return std");

    std::string ckpt_path;
    std::string eval_scene = "simple_static";
    std::string eval_scene_file;
    int eval_episodes = 100;
    bool deterministic = false;
    std::uint64_t eval_seed = 0;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    eval_cmd->add_option("--scene", eval_scene, "scene preset");
    eval_cmd->add_option("--scene-file", eval_scene_file, "scene file (overrides --scene)");
    eval_cmd->add_option("--episodes", eval_episodes, "number of evaluation episodes");
    eval_cmd->add_flag("--deterministic", deterministic, "use the policy mean action");
    eval_cmd->add_option("--seed", eval_seed, "evaluation seed");

    std::string export_preset;
    std::string export_path;
    auto* export_cmd = app.add_subcommand("export-scene", "write a preset to a scene file");
    export_cmd->add_option("--preset", export_preset, "preset name")->required();
    export_cmd->add_option("--out", export_path, "output file")->required();

    // Parse once to find --config, load the file as new defaults, then
    // overlay the options given explicitly on the command line.
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    if (train->parsed() && !config_file.empty()) {
        agv::RunConfig from_file;
        apply_config_file(from_file, config_file);
        // fields not set on the command line fall back to the file
        auto keep = [&](const std::string& opt) { return train->count(opt) > 0; };
        agv::RunConfig merged = from_file;
        if (keep("--scene")) merged.scene_preset = cfg.scene_preset;
        if (keep("--scene-file")) merged.scene_file = cfg.scene_file;
        if (keep("--steps")) merged.total_env_steps = cfg.total_env_steps;
        if (keep("--seed")) merged.seed = cfg.seed;
        if (keep("--out")) merged.out_dir = cfg.out_dir;
        if (keep("--eval-every")) merged.eval_every = cfg.eval_every;
        if (keep("--lr")) merged.ppo.learning_rate = cfg.ppo.learning_rate;
        if (keep("--discount")) merged.ppo.discount = cfg.ppo.discount;
        if (keep("--clip-eps")) merged.ppo.clip_eps = cfg.ppo.clip_eps;
        if (keep("--epochs")) merged.ppo.epochs = cfg.ppo.epochs;
        if (keep("--minibatch")) merged.ppo.minibatch_size = cfg.ppo.minibatch_size;
        if (keep("--horizon")) merged.ppo.collect_horizon = cfg.ppo.collect_horizon;
        if (keep("--alpha-ext")) merged.ppo.alpha_ext = cfg.ppo.alpha_ext;
        if (keep("--beta-int")) merged.ppo.beta_int = cfg.ppo.beta_int;
        if (keep("--value-coef")) merged.ppo.value_coef = cfg.ppo.value_coef;
        if (keep("--entropy-coef")) merged.ppo.entropy_coef = cfg.ppo.entropy_coef;
        if (keep("--n-pre")) merged.n_pre = cfg.n_pre;
        if (keep("--n-envs")) merged.n_envs = cfg.n_envs;
        if (keep("--rnd-lr")) merged.rnd_lr = cfg.rnd_lr;
        if (keep("--rnd-out-dim")) merged.rnd_out_dim = cfg.rnd_out_dim;
        if (keep("--normalize-extrinsic")) merged.normalize_extrinsic = cfg.normalize_extrinsic;
        if (!keep("--rnd")) rnd_flag = merged.rnd_enabled ? "on" : "off";
        cfg = merged;
    }

    if (train->parsed()) {
        cfg.rnd_enabled = (rnd_flag == "on");
        const auto result = agv::run_training(cfg);
        std::cout << "metrics: " << result.metrics_path << "\n"
                  << "trajectories: " << result.trajectories_path << "\n"
                  << "checkpoint: " << result.checkpoint_path << "\n";
        if (!result.metrics.empty()) {
            const auto& last = result.metrics.back();
            std::cout << "final: env_steps=" << last.env_steps << " episodes=" << last.episodes
                      << " mean_ext_reward=" << last.mean_ext_reward
                      << " mean_ep_len=" << last.mean_ep_len << "\n";
        }
        return 0;
    }

    if (eval_cmd->parsed()) {
        const auto ckpt = agv::load_checkpoint(ckpt_path);
        agv::SceneConfig scene;
        if (!eval_scene_file.empty()) {
            scene = agv::load_scene_file(eval_scene_file);
        } else {
            const auto preset = agv::parse_preset(eval_scene);
            if (!preset) throw std::runtime_error("unknown scene preset: " + eval_scene);
            scene = agv::make_scene(*preset);
        }
        agv::Rng rng = agv::Rng::stream(eval_seed, "eval");
        const auto summary = agv::evaluate(ckpt.policy, scene, eval_episodes, deterministic, rng);
        std::cout << "episodes=" << summary.episodes << " success_rate=" << summary.success_rate
                  << " mean_steps_to_target=" << summary.mean_steps_to_target
                  << " mean_ext_reward=" << summary.mean_ext_reward << "\n";
        for (const auto& s : summary.per_spawn) {
            std::cout << "spawn=(" << s.spawn.x << "," << s.spawn.z << ") episodes=" << s.episodes
                      << " success_rate=" << s.success_rate() << "\n";
        }
        return 0;
    }

    if (export_cmd->parsed()) {
        const auto preset = agv::parse_preset(export_preset);
        if (!preset) throw std::runtime_error("unknown scene preset: " + export_preset);
        agv::save_scene_file(agv::make_scene(*preset), export_path);
        std::cout << "wrote " << export_path << "\n";
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
