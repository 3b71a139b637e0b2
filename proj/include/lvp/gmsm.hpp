#pragma once

#include <vector>

#include "lvp/config.hpp"
#include "lvp/layers.hpp"

namespace lvp {

// Multi-scale encoder. Each stage halves the grid while quadrupling channels
// (volume preserving): f_{t+1} = relu(conv2x2_s2(f_t)) + space_to_depth(f_t).
// All stage outputs are reduced to the final grid by repeated space_to_depth,
// concatenated, and mixed down to the m latent channels by a linear 1x1 conv.
// The PlainCnn variant drops the skip and the multi-level concat (stride-2
// conv stack only) and samples from the last stage alone.
struct Gmsm {
    int stages = 3;
    Sampling sampling = Sampling::Multiscale;
    int latent_channels = 0;
    std::vector<ConvLayer> stage_convs; // stage t: 4^t -> 4^(t+1), 2x2 stride 2
    ConvLayer aggregate;                // 1x1 linear -> m

    static Gmsm make(const CodecConfig& cfg, Rng& rng);

    // One downsampling stage; t indexes stage_convs.
    Var stage(const Var& f, int t) const;

    // x: (1, H, W) with H, W divisible by 2^stages, values in [0,1].
    Var forward(const Var& x) const;

    void collect(std::vector<Parameter*>& out);
};

} // namespace lvp
