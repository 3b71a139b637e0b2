#include "lvp/gmsm.hpp"

namespace lvp {

Gmsm Gmsm::make(const CodecConfig& cfg, Rng& rng) {
    Gmsm g;
    g.stages = cfg.stages;
    g.sampling = cfg.sampling;
    g.latent_channels = cfg.latent_channels();
    int ch = 1;
    for (int t = 0; t < g.stages; ++t) {
        g.stage_convs.push_back(
            ConvLayer::make("gmsm.stage" + std::to_string(t), ch * 4, ch, 2, 2, 0, rng));
        ch *= 4;
    }
    const int agg_in = g.sampling == Sampling::Multiscale ? g.stages * ch : ch;
    g.aggregate = ConvLayer::make("gmsm.aggregate", g.latent_channels, agg_in, 1, 1, 0, rng);
    return g;
}

Var Gmsm::stage(const Var& f, int t) const {
    require(f.value().dim(1) % 2 == 0 && f.value().dim(2) % 2 == 0, ErrorKind::Config,
            "gmsm stage: odd extents (container must pad)");
    Var conv = relu(stage_convs[t].apply(f));
    if (sampling == Sampling::PlainCnn) return conv;
    return add(conv, space_to_depth(f));
}

Var Gmsm::forward(const Var& x) const {
    require(x.shape().size() == 3 && x.value().dim(0) == 1, ErrorKind::Config,
            "gmsm: input must be (1,H,W)");
    const int div = 1 << stages;
    require(x.value().dim(1) % div == 0 && x.value().dim(2) % div == 0, ErrorKind::Config,
            "gmsm: extents must be divisible by 2^stages");

    Var f = x;
    std::vector<Var> levels;
    for (int t = 0; t < stages; ++t) {
        f = stage(f, t);
        levels.push_back(f);
    }
    if (sampling == Sampling::PlainCnn) return aggregate.apply(f);

    // Reduce every level to the final grid; space_to_depth keeps the volume.
    std::vector<Var> reduced;
    for (int t = 0; t < stages; ++t) {
        Var r = levels[t];
        for (int k = t + 1; k < stages; ++k) r = space_to_depth(r);
        reduced.push_back(r);
    }
    return aggregate.apply(concat_channels(reduced));
}

void Gmsm::collect(std::vector<Parameter*>& out) {
    for (auto& c : stage_convs) c.collect(out);
    aggregate.collect(out);
}

} // namespace lvp
