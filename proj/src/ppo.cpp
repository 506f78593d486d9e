#include "agv/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace agv {

void Trajectory::clear() {
    obs.clear();
    obs_next.clear();
    action.clear();
    log_prob.clear();
    reward_e.clear();
    reward_i.clear();
    value.clear();
    value_next.clear();
    terminated.clear();
    truncated.clear();
}

std::vector<double> combine_rewards(std::span<const double> r_ext, std::span<const double> r_int,
                                    double alpha_ext, double beta_int) {
    if (r_ext.size() != r_int.size()) throw std::invalid_argument("combine_rewards: length mismatch");
    std::vector<double> out(r_ext.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = alpha_ext * r_ext[i] + beta_int * r_int[i];
    }
    return out;
}

AdvantageResult compute_advantages(const Trajectory& traj, std::span<const double> rewards,
                                   double discount) {
    const std::size_t n = traj.size();
    if (rewards.size() != n) throw std::invalid_argument("compute_advantages: length mismatch");
    AdvantageResult res;
    res.returns.resize(n);
    res.advantages.resize(n);
    double g = 0.0;
    for (std::size_t t = n; t-- > 0;) {
        if (traj.terminated[t]) {
            g = rewards[t];
        } else if (traj.truncated[t] || t + 1 == n) {
            g = rewards[t] + discount * traj.value_next[t];
        } else {
            g = rewards[t] + discount * g;
        }
        res.returns[t] = g;
        res.advantages[t] = g - traj.value[t];
    }

    double mean = std::accumulate(res.advantages.begin(), res.advantages.end(), 0.0) /
                  static_cast<double>(n);
    double var = 0.0;
    for (double a : res.advantages) var += (a - mean) * (a - mean);
    var /= static_cast<double>(n);
    const double inv_std = 1.0 / (std::sqrt(var) + 1e-8);
    for (double& a : res.advantages) a = (a - mean) * inv_std;
    return res;
}

double clipped_objective(double ratio, double advantage, double clip_eps) {
    const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    return std::min(ratio * advantage, clipped * advantage);
}

MinibatchResult ppo_minibatch_loss(const PolicyValueNet& net, const Trajectory& traj,
                                   std::span<const double> advantages,
                                   std::span<const double> returns,
                                   std::span<const std::size_t> indices, const PpoConfig& config,
                                   std::vector<double>* flat_grads) {
    MinibatchResult res;
    if (indices.empty()) return res;
    const double inv_m = 1.0 / static_cast<double>(indices.size());

    MlpGrads trunk_g = net.trunk.make_grads();
    MlpGrads mean_g = net.mean_head.make_grads();
    MlpGrads value_g = net.value_head.make_grads();
    std::array<double, 2> log_std_g{0.0, 0.0};

    PolicyValueNet::EvalCache cache;
    for (const std::size_t i : indices) {
        const auto eval = net.forward(traj.obs[i], &cache);
        const double lp_new = log_prob(eval.policy, traj.action[i]);
        const double ratio = policy_ratio(lp_new, traj.log_prob[i]);
        const double adv = advantages[i];
        const double clipped = std::clamp(ratio, 1.0 - config.clip_eps, 1.0 + config.clip_eps);

        res.surrogate += std::min(ratio * adv, clipped * adv) * inv_m;
        res.approx_kl += (traj.log_prob[i] - lp_new) * inv_m;
        if (std::abs(ratio - 1.0) > config.clip_eps) res.clip_fraction += inv_m;

        const double v_err = eval.value - returns[i];
        res.value_loss += v_err * v_err * inv_m;

        if (!flat_grads) continue;

        // d(-surrogate)/d(lp_new): gradient flows only through the
        // unclipped branch (ties included)
        double d_lp = 0.0;
        if (ratio * adv <= clipped * adv) d_lp = -ratio * adv * inv_m;

        std::array<double, 2> d_mean{0.0, 0.0};
        for (int d = 0; d < 2; ++d) {
            const double ls = std::clamp(eval.policy.log_std[d], kLogStdMin, kLogStdMax);
            const double sigma = std::exp(ls);
            const double z = (traj.action[i][d] - eval.policy.mean[d]) / sigma;
            d_mean[d] = d_lp * (z / sigma);
            const bool saturated =
                eval.policy.log_std[d] <= kLogStdMin || eval.policy.log_std[d] >= kLogStdMax;
            if (!saturated) {
                log_std_g[d] += d_lp * (z * z - 1.0);
                log_std_g[d] += -config.entropy_coef * inv_m;  // entropy bonus
            }
        }
        const double dv[1] = {config.value_coef * 2.0 * v_err * inv_m};

        auto d_feat = net.mean_head.backward(cache.mean, d_mean, mean_g);
        const auto d_feat_v = net.value_head.backward(cache.value, dv, value_g);
        for (std::size_t j = 0; j < d_feat.size(); ++j) d_feat[j] += d_feat_v[j];
        net.trunk.backward(cache.trunk, d_feat, trunk_g);
    }

    // diag-Gaussian entropy: sum(log_std) + D/2 * (1 + ln 2pi), D = 2
    res.entropy = 1.0 + std::log(2.0 * 3.14159265358979323846);
    for (int d = 0; d < 2; ++d) res.entropy += std::clamp(net.log_std[d], kLogStdMin, kLogStdMax);

    res.loss = -res.surrogate + config.value_coef * res.value_loss -
               config.entropy_coef * res.entropy;

    if (flat_grads) {
        flat_grads->clear();
        append_grads(trunk_g, *flat_grads);
        append_grads(mean_g, *flat_grads);
        append_grads(value_g, *flat_grads);
        flat_grads->push_back(log_std_g[0]);
        flat_grads->push_back(log_std_g[1]);
    }
    return res;
}

UpdateStats ppo_update(PolicyValueNet& net, AdamState& opt, const Trajectory& traj,
                       std::span<const double> advantages, std::span<const double> returns,
                       const PpoConfig& config, Rng& shuffle_rng) {
    const std::size_t n = traj.size();
    if (advantages.size() != n || returns.size() != n) {
        throw std::invalid_argument("ppo_update: length mismatch");
    }
    UpdateStats stats;
    if (n == 0 || config.epochs == 0) return stats;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> flat_grads;
    std::vector<double> params;
    long batches = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < n;
             start += static_cast<std::size_t>(config.minibatch_size)) {
            const std::size_t end =
                std::min(n, start + static_cast<std::size_t>(config.minibatch_size));
            const std::span<const std::size_t> indices(order.data() + start, end - start);

            const auto mb =
                ppo_minibatch_loss(net, traj, advantages, returns, indices, config, &flat_grads);

            params = net.get_params();
            adam_step(params, flat_grads, opt);
            net.set_params(params);

            stats.surrogate += mb.surrogate;
            stats.value_loss += mb.value_loss;
            stats.entropy += mb.entropy;
            stats.clip_fraction += mb.clip_fraction;
            stats.approx_kl += mb.approx_kl;
            ++batches;
        }
    }
    if (batches > 0) {
        const double inv_b = 1.0 / static_cast<double>(batches);
        stats.surrogate *= inv_b;
        stats.value_loss *= inv_b;
        stats.entropy *= inv_b;
        stats.clip_fraction *= inv_b;
        stats.approx_kl *= inv_b;
    }
    return stats;
}

}  // namespace agv
