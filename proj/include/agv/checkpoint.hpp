#pragma once

#include <string>

#include "agv/nn.hpp"
#include "agv/rnd.hpp"

namespace agv {

// Versioned flat binary: header (magic, version, flags, obs dim), then per
// network the layer shapes followed by raw little-endian doubles, then the
// normalizer states.
struct Checkpoint {
    int obs_dim = 0;
    PolicyValueNet policy;
    bool has_rnd = false;
    RndModel rnd;
    RunningNormalizer obs_norm{0};
    IntrinsicReturnNormalizer intrinsic_norm;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace agv
