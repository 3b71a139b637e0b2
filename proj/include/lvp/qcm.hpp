#pragma once

#include <vector>

#include "lvp/layers.hpp"

namespace lvp {

// Quantization compensation: a residual trunk whose relu'd output is added to
// the dequantized latent. Floor quantization only ever shrinks values, and
// never by q_step or more, so the correction is clamped to [0, q_step]:
// non-negative by the relu, bounded because any larger adjustment would be
// re-modeling the latent rather than compensating the quantizer.
struct Qcm {
    int blocks = 0;
    int channels = 0;
    double q_step = 0.0;
    ConvLayer conv_in;
    ConvLayer conv_out;
    std::vector<ConvLayer> block_a; // first 3x3 of each residual block
    std::vector<ConvLayer> block_b; // second 3x3

    static Qcm make(int channels, int blocks, double q_step, Rng& rng);

    // h + conv3x3(relu(conv3x3(h))), shape preserved by pad-1.
    Var residual_block(const Var& h, int i) const;

    // y_hat + clamp(relu(trunk(y_hat)), q_step); y_hat <= output <= y_hat + q_step.
    Var forward(const Var& y_hat) const;

    void collect(std::vector<Parameter*>& out);
};

} // namespace lvp
