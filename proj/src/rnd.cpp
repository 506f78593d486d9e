#include "agv/rnd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace agv {

void RunningNormalizer::update(std::span<const std::vector<double>> batch) {
    if (batch.empty()) return;
    const std::size_t dim = mean_.size();
    const double n_b = static_cast<double>(batch.size());
    std::vector<double> batch_mean(dim, 0.0);
    std::vector<double> batch_m2(dim, 0.0);
    for (const auto& x : batch) {
        if (x.size() != dim) throw std::invalid_argument("RunningNormalizer: dim mismatch");
        for (std::size_t i = 0; i < dim; ++i) batch_mean[i] += x[i];
    }
    for (std::size_t i = 0; i < dim; ++i) batch_mean[i] /= n_b;
    for (const auto& x : batch) {
        for (std::size_t i = 0; i < dim; ++i) {
            const double d = x[i] - batch_mean[i];
            batch_m2[i] += d * d;
        }
    }
    // Chan merge of (count_, mean_, m2_) with the batch moments
    const double n_a = count_;
    const double n = n_a + n_b;
    for (std::size_t i = 0; i < dim; ++i) {
        const double delta = batch_mean[i] - mean_[i];
        mean_[i] += delta * n_b / n;
        m2_[i] += batch_m2[i] + delta * delta * n_a * n_b / n;
    }
    count_ = n;
}

void RunningNormalizer::update_one(std::span<const double> x) {
    std::vector<std::vector<double>> batch(1, std::vector<double>(x.begin(), x.end()));
    update(batch);
}

std::vector<double> RunningNormalizer::variance() const {
    std::vector<double> var(mean_.size(), 0.0);
    if (count_ > 1.0) {
        for (std::size_t i = 0; i < var.size(); ++i) var[i] = m2_[i] / (count_ - 1.0);
    }
    return var;
}

std::vector<double> RunningNormalizer::normalize(std::span<const double> x) const {
    if (x.size() != mean_.size()) throw std::invalid_argument("RunningNormalizer: dim mismatch");
    const auto var = variance();
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double z = (x[i] - mean_[i]) / std::sqrt(var[i] + 1e-8);
        out[i] = std::clamp(z, -clip_bound_, clip_bound_);
    }
    return out;
}

void RunningNormalizer::restore(double count, std::vector<double> mean, std::vector<double> m2) {
    if (mean.size() != mean_.size() || m2.size() != m2_.size()) {
        throw std::invalid_argument("RunningNormalizer::restore: dim mismatch");
    }
    count_ = count;
    mean_ = std::move(mean);
    m2_ = std::move(m2);
}

std::vector<double> IntrinsicReturnNormalizer::normalize(std::span<const double> rewards) {
    std::vector<double> out(rewards.size());
    for (std::size_t t = 0; t < rewards.size(); ++t) {
        running_return_ = gamma_ * running_return_ + rewards[t];
        count_ += 1.0;
        const double delta = running_return_ - mean_;
        mean_ += delta / count_;
        m2_ += delta * (running_return_ - mean_);
        const double std_dev = count_ > 0.0 ? std::sqrt(m2_ / count_) : 0.0;
        out[t] = rewards[t] / (std_dev + 1e-8);
    }
    return out;
}

void IntrinsicReturnNormalizer::restore(double running_return, double count, double mean,
                                        double m2) {
    running_return_ = running_return;
    count_ = count;
    mean_ = mean;
    m2_ = m2;
}

RndModel RndModel::make(int obs_dim, int out_dim, Rng& rng, AdamConfig opt) {
    RndModel model;
    model.out_dim = out_dim;
    model.target = Mlp::make({obs_dim, 128, 128, out_dim},
                             {Activation::relu, Activation::relu, Activation::identity}, rng, 1.0);
    model.predictor =
        Mlp::make({obs_dim, 128, 128, 128, out_dim},
                  {Activation::relu, Activation::relu, Activation::relu, Activation::identity},
                  rng, 1.0);
    model.predictor_optimizer = AdamState(model.predictor.param_count(), opt);
    return model;
}

double intrinsic_reward(const RndModel& model, std::span<const double> obs,
                        const RunningNormalizer& obs_norm) {
    if (obs_norm.count() < 1.0) return 0.0;
    const auto x = obs_norm.normalize(obs);
    const auto t = model.target.forward(x);
    const auto p = model.predictor.forward(x);
    double err = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double d = p[i] - t[i];
        err += d * d;
    }
    return err;
}

double train_predictor(RndModel& model, std::span<const std::vector<double>> normalized_batch,
                       int n_steps) {
    if (normalized_batch.empty()) throw std::invalid_argument("train_predictor: empty batch");
    const double inv_n = 1.0 / static_cast<double>(normalized_batch.size());

    // targets are fixed; evaluate them once
    std::vector<std::vector<double>> targets;
    targets.reserve(normalized_batch.size());
    for (const auto& x : normalized_batch) targets.push_back(model.target.forward(x));

    auto batch_loss = [&]() {
        double loss = 0.0;
        for (std::size_t i = 0; i < normalized_batch.size(); ++i) {
            const auto p = model.predictor.forward(normalized_batch[i]);
            for (std::size_t j = 0; j < p.size(); ++j) {
                const double d = p[j] - targets[i][j];
                loss += d * d;
            }
        }
        return loss * inv_n;
    };

    std::vector<double> params;
    std::vector<double> flat_grads;
    MlpCache cache;
    for (int s = 0; s < n_steps; ++s) {
        MlpGrads grads = model.predictor.make_grads();
        for (std::size_t i = 0; i < normalized_batch.size(); ++i) {
            const auto p = model.predictor.forward(normalized_batch[i], &cache);
            std::vector<double> dout(p.size());
            for (std::size_t j = 0; j < p.size(); ++j) {
                dout[j] = 2.0 * (p[j] - targets[i][j]) * inv_n;
            }
            model.predictor.backward(cache, dout, grads);
        }
        params.clear();
        model.predictor.append_params(params);
        flat_grads.clear();
        append_grads(grads, flat_grads);
        adam_step(params, flat_grads, model.predictor_optimizer);
        model.predictor.load_params(params.data());
    }
    return batch_loss();
}

}  // namespace agv
