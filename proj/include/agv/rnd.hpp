#pragma once

#include <span>
#include <vector>

#include "agv/nn.hpp"
#include "agv/rng.hpp"

namespace agv {

// Streaming per-dimension mean/variance with exact parallel-merge updates
// (Chan et al.), so the stored moments match a whole-dataset computation
// regardless of how the data was chunked.
class RunningNormalizer {
public:
    explicit RunningNormalizer(int dim, double clip_bound = 5.0)
        : mean_(static_cast<std::size_t>(dim), 0.0),
          m2_(static_cast<std::size_t>(dim), 0.0),
          clip_bound_(clip_bound) {}

    void update(std::span<const std::vector<double>> batch);
    void update_one(std::span<const double> x);

    // clip((x - mean) / sqrt(var + 1e-8), +/- clip_bound)
    std::vector<double> normalize(std::span<const double> x) const;

    double count() const { return count_; }
    int dim() const { return static_cast<int>(mean_.size()); }
    double clip_bound() const { return clip_bound_; }
    std::span<const double> mean() const { return mean_; }
    // unbiased variance (m2 / (count - 1)); zero until two samples seen
    std::vector<double> variance() const;

    // raw moments, for checkpointing
    std::span<const double> m2() const { return m2_; }
    void restore(double count, std::vector<double> mean, std::vector<double> m2);

private:
    double count_ = 0.0;
    std::vector<double> mean_;
    std::vector<double> m2_;  // sum of squared deviations
    double clip_bound_;
};

// Tracks the discounted running sum of intrinsic rewards and divides each
// reward by the standard deviation of that running sum. No mean
// subtraction, so normalized rewards stay non-negative.
class IntrinsicReturnNormalizer {
public:
    explicit IntrinsicReturnNormalizer(double gamma = 0.99) : gamma_(gamma) {}

    std::vector<double> normalize(std::span<const double> rewards);

    double gamma() const { return gamma_; }
    double running_return() const { return running_return_; }
    double count() const { return count_; }
    double mean() const { return mean_; }
    double m2() const { return m2_; }
    void restore(double running_return, double count, double mean, double m2);

private:
    double gamma_;
    double running_return_ = 0.0;
    // Welford stats over the running-return sequence
    double count_ = 0.0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

// Fixed random target network plus a trained predictor; the prediction
// error on an observation is the intrinsic reward.
struct RndModel {
    Mlp target;     // frozen after init
    Mlp predictor;
    AdamState predictor_optimizer{0};
    int out_dim = 64;

    // The predictor gets one extra hidden layer so it cannot match the
    // target by weight-copying.
    static RndModel make(int obs_dim, int out_dim, Rng& rng, AdamConfig opt = {.lr = 1e-4});
};

// ||predictor(x) - target(x)||^2 on the normalized observation; 0 while the
// normalizer has seen nothing.
double intrinsic_reward(const RndModel& model, std::span<const double> obs,
                        const RunningNormalizer& obs_norm);

// n_steps full-batch Adam updates on the mean squared prediction error;
// returns the loss after the last update. The target is never touched.
double train_predictor(RndModel& model, std::span<const std::vector<double>> normalized_batch,
                       int n_steps);

}  // namespace agv
