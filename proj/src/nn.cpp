#include "agv/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace agv {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

// Orthogonal rows (out <= in) or columns (out > in) via Gram-Schmidt on a
// Gaussian matrix, then scaled by gain.
std::vector<double> orthogonal_matrix(int out, int in, double gain, Rng& rng) {
    const int rows = std::min(out, in);
    const int cols = std::max(out, in);
    std::vector<std::vector<double>> q(static_cast<std::size_t>(rows),
                                       std::vector<double>(static_cast<std::size_t>(cols)));
    for (auto& row : q)
        for (auto& v : row) v = rng.normal();
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < i; ++j) {
            double proj = 0.0;
            for (int k = 0; k < cols; ++k) proj += q[i][k] * q[j][k];
            for (int k = 0; k < cols; ++k) q[i][k] -= proj * q[j][k];
        }
        double nrm = 0.0;
        for (int k = 0; k < cols; ++k) nrm += q[i][k] * q[i][k];
        nrm = std::sqrt(nrm);
        if (nrm < 1e-12) nrm = 1.0;
        for (int k = 0; k < cols; ++k) q[i][k] /= nrm;
    }
    std::vector<double> w(static_cast<std::size_t>(out) * static_cast<std::size_t>(in));
    for (int r = 0; r < out; ++r)
        for (int c = 0; c < in; ++c) {
            const double v = out <= in ? q[r][c] : q[c][r];
            w[static_cast<std::size_t>(r) * in + c] = gain * v;
        }
    return w;
}

double activate(double x, Activation act) {
    switch (act) {
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::tanh: return std::tanh(x);
        case Activation::identity: return x;
    }
    return x;
}

// derivative expressed through the post-activation value
double activate_grad(double post, Activation act) {
    switch (act) {
        case Activation::relu: return post > 0.0 ? 1.0 : 0.0;
        case Activation::tanh: return 1.0 - post * post;
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

}  // namespace

Mlp Mlp::make(const std::vector<int>& dims, const std::vector<Activation>& acts, Rng& rng,
              double output_gain) {
    if (dims.size() < 2 || acts.size() != dims.size() - 1) {
        throw std::invalid_argument("Mlp::make: dims/acts size mismatch");
    }
    Mlp net;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        Layer layer;
        layer.in = dims[i];
        layer.out = dims[i + 1];
        layer.act = acts[i];
        const bool last = i + 2 == dims.size();
        const double gain = last ? output_gain
                                 : (acts[i] == Activation::relu ? std::sqrt(2.0) : 1.0);
        layer.w = orthogonal_matrix(layer.out, layer.in, gain, rng);
        layer.b.assign(static_cast<std::size_t>(layer.out), 0.0);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

std::vector<double> Mlp::forward(std::span<const double> input, MlpCache* cache) const {
    if (static_cast<int>(input.size()) != input_dim()) {
        throw std::invalid_argument("Mlp::forward: input dimension mismatch");
    }
    if (cache) {
        cache->input.assign(input.begin(), input.end());
        cache->activations.clear();
        cache->activations.reserve(layers.size());
    }
    std::vector<double> x(input.begin(), input.end());
    std::vector<double> y;
    for (const auto& layer : layers) {
        y.assign(static_cast<std::size_t>(layer.out), 0.0);
        for (int r = 0; r < layer.out; ++r) {
            const double* wr = layer.w.data() + static_cast<std::size_t>(r) * layer.in;
            double acc = layer.b[static_cast<std::size_t>(r)];
            for (int c = 0; c < layer.in; ++c) acc += wr[c] * x[static_cast<std::size_t>(c)];
            y[static_cast<std::size_t>(r)] = activate(acc, layer.act);
        }
        x = y;
        if (cache) cache->activations.push_back(x);
    }
    return x;
}

std::vector<double> Mlp::backward(const MlpCache& cache, std::span<const double> output_grad,
                                  MlpGrads& grads) const {
    std::vector<double> d(output_grad.begin(), output_grad.end());
    for (std::size_t li = layers.size(); li-- > 0;) {
        const Layer& layer = layers[li];
        const auto& post = cache.activations[li];
        const auto& in_act = li == 0 ? cache.input : cache.activations[li - 1];
        // gradient through the activation
        for (int r = 0; r < layer.out; ++r) {
            d[static_cast<std::size_t>(r)] *= activate_grad(post[static_cast<std::size_t>(r)], layer.act);
        }
        auto& gw = grads.w[li];
        auto& gb = grads.b[li];
        std::vector<double> din(static_cast<std::size_t>(layer.in), 0.0);
        for (int r = 0; r < layer.out; ++r) {
            const double dr = d[static_cast<std::size_t>(r)];
            if (dr == 0.0) continue;
            const double* wr = layer.w.data() + static_cast<std::size_t>(r) * layer.in;
            double* gwr = gw.data() + static_cast<std::size_t>(r) * layer.in;
            gb[static_cast<std::size_t>(r)] += dr;
            for (int c = 0; c < layer.in; ++c) {
                gwr[c] += dr * in_act[static_cast<std::size_t>(c)];
                din[static_cast<std::size_t>(c)] += dr * wr[c];
            }
        }
        d = std::move(din);
    }
    return d;
}

MlpGrads Mlp::make_grads() const {
    MlpGrads g;
    for (const auto& layer : layers) {
        g.w.emplace_back(layer.w.size(), 0.0);
        g.b.emplace_back(layer.b.size(), 0.0);
    }
    return g;
}

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) n += layer.w.size() + layer.b.size();
    return n;
}

void Mlp::append_params(std::vector<double>& out) const {
    for (const auto& layer : layers) {
        out.insert(out.end(), layer.w.begin(), layer.w.end());
        out.insert(out.end(), layer.b.begin(), layer.b.end());
    }
}

std::size_t Mlp::load_params(const double* p) {
    std::size_t offset = 0;
    for (auto& layer : layers) {
        std::copy(p + offset, p + offset + layer.w.size(), layer.w.begin());
        offset += layer.w.size();
        std::copy(p + offset, p + offset + layer.b.size(), layer.b.begin());
        offset += layer.b.size();
    }
    return offset;
}

void append_grads(const MlpGrads& grads, std::vector<double>& out) {
    for (std::size_t i = 0; i < grads.w.size(); ++i) {
        out.insert(out.end(), grads.w[i].begin(), grads.w[i].end());
        out.insert(out.end(), grads.b[i].begin(), grads.b[i].end());
    }
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw std::invalid_argument("adam_step: size mismatch");
    }
    const AdamConfig& c = state.config;
    state.step += 1;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * grads[i];
        state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * grads[i] * grads[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
}

ActionSample sample_action(const GaussianPolicyOutput& out, Rng& rng) {
    ActionSample s;
    for (int i = 0; i < 2; ++i) {
        const double sigma = std::exp(std::clamp(out.log_std[i], kLogStdMin, kLogStdMax));
        s.raw[i] = out.mean[i] + sigma * rng.normal();
    }
    s.clamped = {std::clamp(s.raw[0], -1.0, 1.0), std::clamp(s.raw[1], -1.0, 1.0)};
    s.log_prob = log_prob(out, s.raw);
    return s;
}

double log_prob(const GaussianPolicyOutput& out, const std::array<double, 2>& raw_action) {
    double lp = -std::log(kTwoPi);  // -(D/2) ln(2*pi) with D = 2
    for (int i = 0; i < 2; ++i) {
        const double ls = std::clamp(out.log_std[i], kLogStdMin, kLogStdMax);
        const double z = (raw_action[i] - out.mean[i]) / std::exp(ls);
        lp += -0.5 * z * z - ls;
    }
    return lp;
}

PolicyValueNet PolicyValueNet::make(int obs_dim, Rng& rng) {
    PolicyValueNet net;
    net.trunk = Mlp::make({obs_dim, 128, 128}, {Activation::relu, Activation::relu}, rng,
                          std::sqrt(2.0));
    net.mean_head = Mlp::make({128, 2}, {Activation::identity}, rng, 0.01);
    net.value_head = Mlp::make({128, 1}, {Activation::identity}, rng, 1.0);
    net.log_std = {0.0, 0.0};
    return net;
}

PolicyValueNet::Eval PolicyValueNet::forward(std::span<const double> obs, EvalCache* cache) const {
    const auto features = trunk.forward(obs, cache ? &cache->trunk : nullptr);
    const auto mean = mean_head.forward(features, cache ? &cache->mean : nullptr);
    const auto value = value_head.forward(features, cache ? &cache->value : nullptr);
    Eval e;
    e.policy.mean = {mean[0], mean[1]};
    e.policy.log_std = log_std;
    e.value = value[0];
    return e;
}

std::size_t PolicyValueNet::param_count() const {
    return trunk.param_count() + mean_head.param_count() + value_head.param_count() + 2;
}

std::vector<double> PolicyValueNet::get_params() const {
    std::vector<double> p;
    p.reserve(param_count());
    trunk.append_params(p);
    mean_head.append_params(p);
    value_head.append_params(p);
    p.push_back(log_std[0]);
    p.push_back(log_std[1]);
    return p;
}

void PolicyValueNet::set_params(std::span<const double> p) {
    if (p.size() != param_count()) throw std::invalid_argument("PolicyValueNet::set_params: size");
    std::size_t off = trunk.load_params(p.data());
    off += mean_head.load_params(p.data() + off);
    off += value_head.load_params(p.data() + off);
    log_std = {p[off], p[off + 1]};
}

}  // namespace agv
