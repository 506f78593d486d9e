#include "agv/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace agv {

namespace {

constexpr std::uint32_t kMagic = 0x43564741;  // "AGVC"
constexpr std::uint32_t kVersion = 1;

// This code targets little-endian hosts; the on-disk format is LE.
void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_f64s(std::ostream& out, const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

double read_f64(std::istream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

std::vector<double> read_f64s(std::istream& in, std::size_t n) {
    std::vector<double> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

void write_mlp(std::ostream& out, const Mlp& net) {
    write_u32(out, static_cast<std::uint32_t>(net.layers.size()));
    for (const auto& layer : net.layers) {
        write_u32(out, static_cast<std::uint32_t>(layer.in));
        write_u32(out, static_cast<std::uint32_t>(layer.out));
        write_u32(out, static_cast<std::uint32_t>(layer.act));
    }
    for (const auto& layer : net.layers) {
        write_f64s(out, layer.w);
        write_f64s(out, layer.b);
    }
}

Mlp read_mlp(std::istream& in) {
    Mlp net;
    const std::uint32_t n_layers = read_u32(in);
    if (n_layers > 64) throw std::runtime_error("checkpoint: implausible layer count");
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        Layer layer;
        layer.in = static_cast<int>(read_u32(in));
        layer.out = static_cast<int>(read_u32(in));
        layer.act = static_cast<Activation>(read_u32(in));
        net.layers.push_back(std::move(layer));
    }
    for (auto& layer : net.layers) {
        layer.w = read_f64s(in, static_cast<std::size_t>(layer.in) * layer.out);
        layer.b = read_f64s(in, static_cast<std::size_t>(layer.out));
    }
    return net;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    write_u32(out, kMagic);
    write_u32(out, kVersion);
    write_u32(out, ckpt.has_rnd ? 1u : 0u);
    write_u32(out, static_cast<std::uint32_t>(ckpt.obs_dim));

    write_mlp(out, ckpt.policy.trunk);
    write_mlp(out, ckpt.policy.mean_head);
    write_mlp(out, ckpt.policy.value_head);
    write_f64(out, ckpt.policy.log_std[0]);
    write_f64(out, ckpt.policy.log_std[1]);

    if (ckpt.has_rnd) {
        write_u32(out, static_cast<std::uint32_t>(ckpt.rnd.out_dim));
        write_mlp(out, ckpt.rnd.target);
        write_mlp(out, ckpt.rnd.predictor);
    }

    write_u32(out, static_cast<std::uint32_t>(ckpt.obs_norm.dim()));
    write_f64(out, ckpt.obs_norm.clip_bound());
    write_f64(out, ckpt.obs_norm.count());
    write_f64s(out, {ckpt.obs_norm.mean().begin(), ckpt.obs_norm.mean().end()});
    write_f64s(out, {ckpt.obs_norm.m2().begin(), ckpt.obs_norm.m2().end()});

    write_f64(out, ckpt.intrinsic_norm.gamma());
    write_f64(out, ckpt.intrinsic_norm.running_return());
    write_f64(out, ckpt.intrinsic_norm.count());
    write_f64(out, ckpt.intrinsic_norm.mean());
    write_f64(out, ckpt.intrinsic_norm.m2());

    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    if (read_u32(in) != kMagic) throw std::runtime_error("checkpoint: bad magic: " + path);
    if (read_u32(in) != kVersion) throw std::runtime_error("checkpoint: unsupported version");
    Checkpoint ckpt;
    ckpt.has_rnd = read_u32(in) != 0;
    ckpt.obs_dim = static_cast<int>(read_u32(in));

    ckpt.policy.trunk = read_mlp(in);
    ckpt.policy.mean_head = read_mlp(in);
    ckpt.policy.value_head = read_mlp(in);
    ckpt.policy.log_std[0] = read_f64(in);
    ckpt.policy.log_std[1] = read_f64(in);

    if (ckpt.has_rnd) {
        ckpt.rnd.out_dim = static_cast<int>(read_u32(in));
        ckpt.rnd.target = read_mlp(in);
        ckpt.rnd.predictor = read_mlp(in);
        ckpt.rnd.predictor_optimizer = AdamState(ckpt.rnd.predictor.param_count());
    }

    const int norm_dim = static_cast<int>(read_u32(in));
    const double clip = read_f64(in);
    ckpt.obs_norm = RunningNormalizer(norm_dim, clip);
    const double count = read_f64(in);
    auto mean = read_f64s(in, static_cast<std::size_t>(norm_dim));
    auto m2 = read_f64s(in, static_cast<std::size_t>(norm_dim));
    ckpt.obs_norm.restore(count, std::move(mean), std::move(m2));

    const double gamma = read_f64(in);
    ckpt.intrinsic_norm = IntrinsicReturnNormalizer(gamma);
    const double rr = read_f64(in);
    const double icount = read_f64(in);
    const double imean = read_f64(in);
    const double im2 = read_f64(in);
    ckpt.intrinsic_norm.restore(rr, icount, imean, im2);
    return ckpt;
}

}  // namespace agv
