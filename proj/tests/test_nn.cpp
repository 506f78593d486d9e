#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <functional>

#include "agv/nn.hpp"

using namespace agv;

namespace {

// central finite differences over a flat parameter vector
std::vector<double> finite_diff(std::vector<double> params,
                                const std::function<double(const std::vector<double>&)>& f,
                                double h = 1e-4) {
    std::vector<double> grad(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + h;
        const double fp = f(params);
        params[i] = saved - h;
        const double fm = f(params);
        params[i] = saved;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

void check_close(const std::vector<double>& analytic, const std::vector<double>& numeric,
                 double rel_tol = 1e-4) {
    REQUIRE(analytic.size() == numeric.size());
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-6});
        REQUIRE(std::abs(analytic[i] - numeric[i]) / scale <= rel_tol);
    }
}

}  // namespace

TEST_CASE("forward: zero weights with relu give zero output") {
    Rng rng(0);
    auto net = Mlp::make({3, 4, 2}, {Activation::relu, Activation::relu}, rng);
    for (auto& layer : net.layers) {
        std::fill(layer.w.begin(), layer.w.end(), 0.0);
        std::fill(layer.b.begin(), layer.b.end(), 0.0);
    }
    const auto out = net.forward(std::vector<double>{1.0, -2.0, 3.0});
    CHECK(out == std::vector<double>{0.0, 0.0});
}

TEST_CASE("forward: identity layer with identity matrix passes input through") {
    Rng rng(0);
    auto net = Mlp::make({3, 3}, {Activation::identity}, rng);
    std::fill(net.layers[0].w.begin(), net.layers[0].w.end(), 0.0);
    for (int i = 0; i < 3; ++i) net.layers[0].w[static_cast<std::size_t>(i) * 3 + i] = 1.0;
    const std::vector<double> in{0.5, -1.5, 2.0};
    CHECK(net.forward(in) == in);
}

TEST_CASE("forward: fixed 2-layer net matches hand arithmetic") {
    Rng rng(0);
    auto net = Mlp::make({2, 2, 1}, {Activation::relu, Activation::identity}, rng);
    net.layers[0].w = {1.0, 2.0, -3.0, 4.0};  // rows: [1 2], [-3 4]
    net.layers[0].b = {0.5, -1.0};
    net.layers[1].w = {2.0, -1.0};
    net.layers[1].b = {0.25};
    // input (1, -1): pre = (1-2+0.5, -3-4-1) = (-0.5, -8) -> relu (0, 0)
    // out = 0.25
    CHECK(net.forward(std::vector<double>{1.0, -1.0})[0] == doctest::Approx(0.25));
    // input (1, 1): pre = (3.5, 0) -> relu (3.5, 0); out = 7 + 0.25
    CHECK(net.forward(std::vector<double>{1.0, 1.0})[0] == doctest::Approx(7.25));
}

TEST_CASE("forward: dimension mismatch throws") {
    Rng rng(0);
    auto net = Mlp::make({3, 2}, {Activation::identity}, rng);
    CHECK_THROWS_AS(net.forward(std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("backward: linear layer, loss = sum(outputs)") {
    Rng rng(1);
    auto net = Mlp::make({3, 2}, {Activation::identity}, rng);
    MlpCache cache;
    const std::vector<double> in{1.0, 2.0, 3.0};
    net.forward(in, &cache);
    auto grads = net.make_grads();
    const auto din = net.backward(cache, std::vector<double>{1.0, 1.0}, grads);
    // dW = outer(ones, input)
    CHECK(grads.w[0] == std::vector<double>{1.0, 2.0, 3.0, 1.0, 2.0, 3.0});
    CHECK(grads.b[0] == std::vector<double>{1.0, 1.0});
    // din = W^T * ones
    for (int c = 0; c < 3; ++c) {
        CHECK(din[static_cast<std::size_t>(c)] ==
              doctest::Approx(net.layers[0].w[static_cast<std::size_t>(c)] +
                              net.layers[0].w[static_cast<std::size_t>(3 + c)]));
    }
}

TEST_CASE("backward: zero output grad gives zero grads") {
    Rng rng(2);
    auto net = Mlp::make({4, 5, 3}, {Activation::tanh, Activation::identity}, rng);
    MlpCache cache;
    net.forward(std::vector<double>{0.1, -0.2, 0.3, 0.7}, &cache);
    auto grads = net.make_grads();
    net.backward(cache, std::vector<double>{0.0, 0.0, 0.0}, grads);
    for (const auto& gw : grads.w)
        for (double v : gw) CHECK(v == 0.0);
}

TEST_CASE("backward: matches central finite differences on random nets") {
    for (const auto act : {Activation::relu, Activation::tanh}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            Rng rng(seed);
            auto net = Mlp::make({4, 8, 6, 3}, {act, act, Activation::identity}, rng);
            std::vector<double> in(4);
            for (auto& v : in) v = rng.uniform(-1.0, 1.0);
            std::vector<double> coeff(3);
            for (auto& v : coeff) v = rng.uniform(-1.0, 1.0);

            MlpCache cache;
            net.forward(in, &cache);
            auto grads = net.make_grads();
            net.backward(cache, coeff, grads);
            std::vector<double> analytic;
            append_grads(grads, analytic);

            std::vector<double> params;
            net.append_params(params);
            auto loss = [&](const std::vector<double>& p) {
                Mlp probe = net;
                probe.load_params(p.data());
                const auto out = probe.forward(in);
                double s = 0.0;
                for (std::size_t i = 0; i < out.size(); ++i) s += coeff[i] * out[i];
                return s;
            };
            check_close(analytic, finite_diff(params, loss));
        }
    }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    std::vector<double> params{1.0, -2.0, 3.0};
    const auto saved = params;
    AdamState state(3);
    std::vector<double> grads{0.0, 0.0, 0.0};
    adam_step(params, grads, state);
    CHECK(params == saved);
}

TEST_CASE("adam: first step matches the bias-corrected closed form") {
    const double g = 0.37;
    const AdamConfig cfg;
    std::vector<double> params{1.0};
    AdamState state(1, cfg);
    std::vector<double> grads{g};
    adam_step(params, grads, state);
    // m_hat = g, v_hat = g^2 after bias correction at t=1
    const double expected = 1.0 - cfg.lr * g / (std::abs(g) + cfg.eps);
    CHECK(params[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("adam: identical runs give identical trajectories") {
    auto run = [] {
        Rng rng(3);
        std::vector<double> params{0.5, -0.5};
        AdamState state(2);
        for (int i = 0; i < 100; ++i) {
            std::vector<double> grads{rng.normal(), rng.normal()};
            adam_step(params, grads, state);
        }
        return params;
    };
    CHECK(run() == run());
}

TEST_CASE("sample_action: tiny sigma collapses to the mean") {
    GaussianPolicyOutput out;
    out.mean = {0.3, -0.7};
    out.log_std = {-20.0, -20.0};  // clamped to -5, sigma ~ 6.7e-3
    Rng rng(0);
    for (int i = 0; i < 100; ++i) {
        const auto s = sample_action(out, rng);
        CHECK(std::abs(s.raw[0] - 0.3) < 0.05);
        CHECK(std::abs(s.raw[1] + 0.7) < 0.05);
        CHECK(s.clamped.fx >= -1.0);
        CHECK(s.clamped.fx <= 1.0);
    }
}

TEST_CASE("log_prob at the mean with log_std = 0 is -ln(2*pi)") {
    GaussianPolicyOutput out;
    out.mean = {0.1, -0.4};
    out.log_std = {0.0, 0.0};
    CHECK(log_prob(out, {0.1, -0.4}) ==
          doctest::Approx(-std::log(2.0 * 3.14159265358979323846)).epsilon(1e-12));
}

TEST_CASE("sample_action: empirical mean within 3 sigma / sqrt(n)") {
    GaussianPolicyOutput out;
    out.mean = {0.25, -0.5};
    out.log_std = {-0.5, 0.3};
    Rng rng(77);
    const int n = 100000;
    double sum0 = 0.0, sum1 = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto s = sample_action(out, rng);
        sum0 += s.raw[0];
        sum1 += s.raw[1];
    }
    const double bound0 = 3.0 * std::exp(-0.5) / std::sqrt(static_cast<double>(n));
    const double bound1 = 3.0 * std::exp(0.3) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(sum0 / n - 0.25) <= bound0);
    CHECK(std::abs(sum1 / n + 0.5) <= bound1);
}

TEST_CASE("log_prob: density integrates to 1 on 1D slices (quadrature)") {
    GaussianPolicyOutput out;
    out.mean = {0.2, -0.3};
    out.log_std = {-0.2, 0.4};
    // integrate the joint over a0 with a1 fixed at its mean; the result must
    // equal the Gaussian marginal density of a1 at its mean
    const double sigma0 = std::exp(-0.2);
    const double sigma1 = std::exp(0.4);
    const double lo = 0.2 - 10.0 * sigma0;
    const double hi = 0.2 + 10.0 * sigma0;
    const int n = 4000;  // Simpson's rule, even interval count
    const double h = (hi - lo) / n;
    double integral = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double a0 = lo + h * i;
        const double f = std::exp(log_prob(out, {a0, -0.3}));
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        integral += w * f;
    }
    integral *= h / 3.0;
    const double marginal = 1.0 / (sigma1 * std::sqrt(2.0 * 3.14159265358979323846));
    CHECK(std::abs(integral - marginal) <= 1e-3);
}

TEST_CASE("PolicyValueNet: deterministic seeded init and flat param round trip") {
    Rng a(9), b(9);
    auto net1 = PolicyValueNet::make(76, a);
    auto net2 = PolicyValueNet::make(76, b);
    CHECK(net1.get_params() == net2.get_params());

    auto params = net1.get_params();
    params[0] += 1.0;
    net2.set_params(params);
    CHECK(net2.get_params() == params);

    std::vector<double> obs(76, 0.1);
    const auto e1 = net1.forward(obs);
    const auto e2 = net1.forward(obs);
    CHECK(e1.value == e2.value);
    CHECK(e1.policy.mean == e2.policy.mean);
}
