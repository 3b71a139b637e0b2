#include "lvp/predictor.hpp"

#include "lvp/mathfn.hpp"

namespace lvp {

Predictor Predictor::make(const CodecConfig& cfg, Rng& rng) {
    Predictor p;
    p.stages = cfg.stages;
    p.in_channels = cfg.latent_channels();
    p.base_width = cfg.predictor_width;
    int in_c = p.in_channels;
    for (int i = 0; i < p.stages; ++i) {
        const int level = p.stages - 1 - i; // level reached after this stage
        const int out_w = width_at_level(level, p.base_width);
        p.up_convs.push_back(
            ConvLayer::make("pred.up" + std::to_string(i), 4 * out_w, in_c, 1, 1, 0, rng));
        in_c = out_w;
    }
    p.head = ConvLayer::make("pred.head", 256, in_c, 1, 1, 0, rng);
    return p;
}

Var Predictor::forward(const Var& comp) const {
    require(comp.shape().size() == 3 && comp.value().dim(0) == in_channels, ErrorKind::Codec,
            "predictor: latent channel mismatch");
    Var h = comp;
    for (int i = 0; i < stages; ++i) h = relu(depth_to_space(up_convs[i].apply(h)));
    return head.apply(h);
}

void Predictor::collect(std::vector<Parameter*>& out) {
    for (auto& c : up_convs) c.collect(out);
    head.collect(out);
}

Tensor floored_probs(const Tensor& probs) {
    constexpr double kFloor = 0x1.0p-20;
    const double inv = 1.0 / (1.0 + 256.0 * kFloor);
    Tensor out(probs.shape);
    for (size_t i = 0; i < probs.data.size(); ++i) out.data[i] = (probs.data[i] + kFloor) * inv;
    return out;
}

double nll_bits(const PixelDistribution& dist, const std::vector<uint8_t>& pixels, int valid_h,
                int valid_w) {
    return nll_bits(dist.probs, pixels, valid_h, valid_w);
}

double nll_bits(const Tensor& probs, const std::vector<uint8_t>& pixels, int valid_h,
                int valid_w) {
    require(probs.shape.size() == 3 && probs.dim(0) == 256, ErrorKind::Config,
            "nll_bits: probs must be (256,H,W)");
    const int H = probs.dim(1), W = probs.dim(2);
    require(valid_h <= H && valid_w <= W, ErrorKind::Config, "nll_bits: window exceeds plane");
    require(static_cast<size_t>(valid_h) * valid_w == pixels.size(), ErrorKind::Config,
            "nll_bits: pixel count mismatch");
    const int64_t plane = static_cast<int64_t>(H) * W;
    double bits = 0.0;
    for (int y = 0; y < valid_h; ++y)
        for (int x = 0; x < valid_w; ++x) {
            const int v = pixels[static_cast<size_t>(y) * valid_w + x];
            bits -= det_log2(probs.data[static_cast<size_t>(v) * plane + y * static_cast<int64_t>(W) + x]);
        }
    return bits;
}

} // namespace lvp
