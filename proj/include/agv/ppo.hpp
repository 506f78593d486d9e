#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "agv/nn.hpp"
#include "agv/rng.hpp"

namespace agv {

// One collection phase, stored column-wise. Actions are the unclamped
// Gaussian draws (the environment saw their clamped versions); log_prob is
// the behavior policy's density of that draw.
struct Trajectory {
    std::vector<std::vector<double>> obs;
    std::vector<std::vector<double>> obs_next;
    std::vector<std::array<double, 2>> action;
    std::vector<double> log_prob;
    std::vector<double> reward_e;
    std::vector<double> reward_i;
    std::vector<double> value;       // V(s_t) at collection time
    std::vector<double> value_next;  // V(s_{t+1}), used to bootstrap truncations
    std::vector<std::uint8_t> terminated;
    std::vector<std::uint8_t> truncated;

    std::size_t size() const { return obs.size(); }
    void clear();
};

struct PpoConfig {
    // MC returns carry the terminal bonus to the route-choice steps near the
    // episode start only through discount^k, so keep the horizon long
    double discount = 0.995;
    double clip_eps = 0.2;
    int epochs = 3;            // E
    int minibatch_size = 512;  // B
    // big batches: smaller slices can hold a single truncated episode and
    // make updates oscillate
    int collect_horizon = 8192;
    double alpha_ext = 1.0;
    // strong enough to keep pulling the policy toward unvisited map regions
    // after the first of several target spawns is mastered
    double beta_int = 0.3;
    double value_coef = 0.5;
    double entropy_coef = 0.005;
    double learning_rate = 3e-4;
};

struct UpdateStats {
    double surrogate = 0.0;   // mean clipped objective
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    double approx_kl = 0.0;
};

// r_t = alpha_ext * r_e + beta_int * r_i, elementwise.
std::vector<double> combine_rewards(std::span<const double> r_ext, std::span<const double> r_int,
                                    double alpha_ext, double beta_int);

struct AdvantageResult {
    std::vector<double> returns;     // discounted returns G_t
    std::vector<double> advantages;  // standardized G_t - V(s_t)
};

// Monte-Carlo discounted returns within each episode; truncations (and a
// buffer that ends mid-episode) bootstrap with V(s_{t+1}). Advantages are
// standardized over the batch.
AdvantageResult compute_advantages(const Trajectory& traj, std::span<const double> rewards,
                                   double discount);

inline double policy_ratio(double logp_new, double logp_old) {
    return std::exp(logp_new - logp_old);
}

// min(ratio * A, clip(ratio, 1-eps, 1+eps) * A)
double clipped_objective(double ratio, double advantage, double clip_eps);

struct MinibatchResult {
    double loss = 0.0;        // -surrogate + value_coef * MSE - entropy_coef * H
    double surrogate = 0.0;   // mean clipped objective over the minibatch
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    double approx_kl = 0.0;
};

// Mean combined loss over the indexed minibatch and, when `flat_grads` is
// non-null, its gradient with respect to the flat parameter vector (same
// layout as PolicyValueNet::get_params). This is the update path; the
// gradient-check tests difference it directly.
MinibatchResult ppo_minibatch_loss(const PolicyValueNet& net, const Trajectory& traj,
                                   std::span<const double> advantages,
                                   std::span<const double> returns,
                                   std::span<const std::size_t> indices, const PpoConfig& config,
                                   std::vector<double>* flat_grads);

// E epochs of shuffled minibatch Adam on
//   -surrogate + value_coef * (V - G)^2 - entropy_coef * entropy.
// Old log-probs stay frozen at their collection-time values.
UpdateStats ppo_update(PolicyValueNet& net, AdamState& opt, const Trajectory& traj,
                       std::span<const double> advantages, std::span<const double> returns,
                       const PpoConfig& config, Rng& shuffle_rng);

}  // namespace agv
