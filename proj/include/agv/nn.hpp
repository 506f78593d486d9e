#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "agv/env.hpp"
#include "agv/rng.hpp"

namespace agv {

enum class Activation { relu, tanh, identity };

struct Layer {
    int in = 0;
    int out = 0;
    std::vector<double> w;  // out x in, row-major
    std::vector<double> b;  // out
    Activation act = Activation::identity;
};

// Post-activation values per layer, plus the input; enough to reconstruct
// exact reverse-mode gradients for relu/tanh/identity layers.
struct MlpCache {
    std::vector<double> input;
    std::vector<std::vector<double>> activations;
};

struct MlpGrads {
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;
};

class Mlp {
public:
    Mlp() = default;

    // dims = {in, h1, ..., out}; acts has dims.size()-1 entries.
    // Weights get an orthogonal-style init scaled by `gain` on the last
    // layer and sqrt(2) on hidden relu layers; biases start at zero.
    static Mlp make(const std::vector<int>& dims, const std::vector<Activation>& acts, Rng& rng,
                    double output_gain = 1.0);

    std::vector<double> forward(std::span<const double> input, MlpCache* cache = nullptr) const;

    // Accumulates parameter gradients into `grads` (shaped by make_grads)
    // and returns the gradient with respect to the input.
    std::vector<double> backward(const MlpCache& cache, std::span<const double> output_grad,
                                 MlpGrads& grads) const;

    MlpGrads make_grads() const;

    int input_dim() const { return layers.empty() ? 0 : layers.front().in; }
    int output_dim() const { return layers.empty() ? 0 : layers.back().out; }

    std::size_t param_count() const;
    void append_params(std::vector<double>& out) const;
    // Reads param_count() values; returns the number consumed.
    std::size_t load_params(const double* p);

    std::vector<Layer> layers;
};

// Appends grads in the same flat order as Mlp::append_params.
void append_grads(const MlpGrads& grads, std::vector<double>& out);

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    explicit AdamState(std::size_t n, AdamConfig cfg = {})
        : m(n, 0.0), v(n, 0.0), config(cfg) {}
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;
    AdamConfig config;
};

// In-place Adam update with bias correction; `grads` is the gradient of the
// quantity being minimized.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

struct GaussianPolicyOutput {
    std::array<double, 2> mean{};
    std::array<double, 2> log_std{};  // clamped to [-5, 2] before use
};

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

struct ActionSample {
    Action clamped;                // fed to the environment
    std::array<double, 2> raw{};   // unclamped draw, kept for the update
    double log_prob = 0.0;         // density of the unclamped draw
};

ActionSample sample_action(const GaussianPolicyOutput& out, Rng& rng);
double log_prob(const GaussianPolicyOutput& out, const std::array<double, 2>& raw_action);

// Shared-trunk actor-critic: trunk 76->128->128 relu, linear mean and value
// heads, state-independent log_std.
struct PolicyValueNet {
    Mlp trunk;
    Mlp mean_head;
    Mlp value_head;
    std::array<double, 2> log_std{};

    static PolicyValueNet make(int obs_dim, Rng& rng);

    struct EvalCache {
        MlpCache trunk;
        MlpCache mean;
        MlpCache value;
    };
    struct Eval {
        GaussianPolicyOutput policy;
        double value = 0.0;
    };
    Eval forward(std::span<const double> obs, EvalCache* cache = nullptr) const;

    std::size_t param_count() const;
    std::vector<double> get_params() const;
    void set_params(std::span<const double> p);
};

}  // namespace agv
