#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lvp/config.hpp"
#include "lvp/gmsm.hpp"
#include "lvp/predictor.hpp"
#include "lvp/qcm.hpp"
#include "lvp/quantizer.hpp"

namespace lvp {

struct LvpModel {
    CodecConfig cfg;
    Gmsm gmsm;
    std::optional<Qcm> qcm;
    Predictor predictor;

    static LvpModel make(const CodecConfig& cfg, uint64_t init_seed);

    std::vector<Parameter*> params();
    std::vector<const Parameter*> params() const;
    void zero_grads();

    // Same architecture, parameter values copied (optimizer state not cloned).
    LvpModel clone() const;
    void copy_values_from(const LvpModel& other);

    // Training graph: padded normalized image -> bits loss over the valid
    // window. smooth_quant replaces the floor with its straight-through
    // surrogate (gradient checking only).
    struct TrainForward {
        Var loss;
        std::shared_ptr<Tensor> probs;
    };
    TrainForward training_graph(const Tensor& x_norm, const std::vector<uint8_t>& target_plane,
                                int valid_h, int valid_w, bool smooth_quant = false);

    // Codec-side forwards (gradient-free, deterministic).
    Tensor latent_forward(const Tensor& x_norm) const;   // y = G(x), (m,g,g)
    Tensor decode_probs(const QuantizedLatent& zq) const; // floored (256,Hp,Wp)

    // Full prediction surface: distributions for a target_h x target_w image
    // whose padded geometry must match the latent grid.
    PixelDistribution predict(const QuantizedLatent& zq, int target_h, int target_w) const;

    // Streaming variant: the predictor is 1x1-conv local, so pixel
    // probabilities can be produced one latent-grid row at a time; only the
    // QCM (3x3 convs) needs the whole grid. Keeps peak memory flat for
    // large images.
    Tensor compensated_from_z(const QuantizedLatent& zq) const; // (m,g,g)
    Tensor stripe_probs(const Tensor& comp, int grid_row) const; // (256, 2^T, Wp)

    // Intermediate planes for the feature-dump debug facility.
    struct FeatureDump {
        std::vector<Tensor> stage_features; // f_1 .. f_T
        Tensor latent;                      // y
        Tensor dequantized;                 // y_hat
        Tensor compensated;                 // QCM output (== y_hat when QCM off)
    };
    FeatureDump feature_dump(const Tensor& x_norm) const;
};

// Model file ("LVPM"): config, named parameter tensors, trailing fnv1a64 of
// everything before it. load verifies the hash and every shape.
uint64_t save_model(const LvpModel& model, const std::string& path);

struct LoadedModel {
    LvpModel model;
    uint64_t hash = 0;
};
LoadedModel load_model(const std::string& path);

std::vector<uint8_t> serialize_model(const LvpModel& model); // without hash trailer
LoadedModel parse_model(const std::vector<uint8_t>& file_bytes);

} // namespace lvp
