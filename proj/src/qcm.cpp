#include "lvp/qcm.hpp"

namespace lvp {

Qcm Qcm::make(int channels, int blocks, double q_step, Rng& rng) {
    require(blocks >= 1, ErrorKind::Config, "qcm: needs at least one residual block");
    require(q_step > 0.0, ErrorKind::Config, "qcm: q_step must be positive");
    Qcm q;
    q.blocks = blocks;
    q.channels = channels;
    q.q_step = q_step;
    q.conv_in = ConvLayer::make("qcm.in", channels, channels, 3, 1, 1, rng);
    for (int i = 0; i < blocks; ++i) {
        q.block_a.push_back(
            ConvLayer::make("qcm.block" + std::to_string(i) + ".a", channels, channels, 3, 1, 1, rng));
        // Second conv of each block starts at zero (fixup-style): every block
        // is the identity at initialization, which keeps a deep norm-free
        // trunk stable, and the gradient into the zero conv is nonzero so
        // the block wakes up from the first step.
        ConvLayer b =
            ConvLayer::make("qcm.block" + std::to_string(i) + ".b", channels, channels, 3, 1, 1, rng);
        for (auto& v : b.w.value().data) v = 0.0;
        q.block_b.push_back(std::move(b));
    }
    q.conv_out = ConvLayer::make("qcm.out", channels, channels, 3, 1, 1, rng);
    // Zero output weights with a q_step/2 bias: the trunk contributes only
    // the mean floor error at initialization, so the predictor sees clean
    // latents from the first step, while the strictly positive bias keeps
    // the final relu's gradient open (relu'(0) is pinned to 0).
    for (auto& v : q.conv_out.w.value().data) v = 0.0;
    for (auto& v : q.conv_out.b.value().data) v = q_step * 0.5;
    return q;
}

Var Qcm::residual_block(const Var& h, int i) const {
    return add(h, block_b[i].apply(relu(block_a[i].apply(h))));
}

Var Qcm::forward(const Var& y_hat) const {
    Var t = conv_in.apply(y_hat);
    for (int i = 0; i < blocks; ++i) t = residual_block(t, i);
    t = conv_out.apply(t);
    return add(y_hat, clamp_max(relu(t), q_step));
}

void Qcm::collect(std::vector<Parameter*>& out) {
    conv_in.collect(out);
    for (int i = 0; i < blocks; ++i) {
        block_a[i].collect(out);
        block_b[i].collect(out);
    }
    conv_out.collect(out);
}

} // namespace lvp
