#pragma once

#include <vector>

#include "lvp/config.hpp"
#include "lvp/layers.hpp"

namespace lvp {

// Maps compensated latents back to full resolution and emits 256-way logits
// per pixel. Upsampling mirrors the encoder stage count: each stage is a 1x1
// conv to 4x the next width followed by depth_to_space and relu; the head is
// a linear 1x1 conv to the 256 intensity bins.
struct Predictor {
    int stages = 3;
    int in_channels = 0; // m
    int base_width = 8;
    std::vector<ConvLayer> up_convs; // stage i lifts level (stages-i) -> (stages-i-1)
    ConvLayer head;                  // 1x1 -> 256

    // Channel width once upsampled to grid level k (grid = H / 2^k).
    static int width_at_level(int level, int base) {
        int64_t w = int64_t{4} << (2 * level); // 4^(level+1)
        if (w > 256) w = 256;
        if (w < base) w = base;
        return static_cast<int>(w);
    }

    static Predictor make(const CodecConfig& cfg, Rng& rng);

    // comp: (m, H/2^T, W/2^T) -> logits (256, H, W)
    Var forward(const Var& comp) const;

    void collect(std::vector<Parameter*>& out);
};

// Softmax probabilities with the 2^-20 floor renormalized in, guaranteeing
// every bin stays codable. This is the distribution the entropy coder sees.
Tensor floored_probs(const Tensor& probs);

// Per-pixel coding distributions: floored probabilities plus the integer
// frequency tables derived from them (256 entries per pixel, row-major;
// empty until fill_pixel_frequencies runs). The container streams tables
// pixel by pixel instead of materializing this, but the materialized form
// is the natural unit for inspection and tests.
struct PixelDistribution {
    Tensor probs;               // (256, H, W)
    std::vector<uint16_t> freq; // 256 * H * W once filled
};

// Exact bits cost of coding `pixels` (row-major, valid window) under probs.
double nll_bits(const Tensor& probs, const std::vector<uint8_t>& pixels, int valid_h,
                int valid_w);
double nll_bits(const PixelDistribution& dist, const std::vector<uint8_t>& pixels, int valid_h,
                int valid_w);

} // namespace lvp
