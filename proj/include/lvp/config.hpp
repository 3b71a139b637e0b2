#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "lvp/errors.hpp"

namespace lvp {

enum class Sampling : uint8_t { Multiscale = 0, PlainCnn = 1 };

// Architecture hyperparameters. Everything that fixes encoder/decoder
// symmetry lives here and is serialized into the model file.
struct CodecConfig {
    int stages = 3;            // T; final grid is (H/2^T, W/2^T)
    uint16_t rate_num = 3;     // sampling rate r as an exact rational
    uint16_t rate_den = 20;    // default 3/20 = 0.15
    double q_step = 0.01;
    int qcm_blocks = 24;       // 24 dataset mode, 3 single-image mode
    int predictor_width = 8;   // channel width at full resolution
    Sampling sampling = Sampling::Multiscale;
    bool use_qcm = true;

    double rate() const { return static_cast<double>(rate_num) / rate_den; }

    void set_rate(double r) {
        require(r > 0.0 && r <= 1.0, ErrorKind::Config, "sampling rate must be in (0,1]");
        auto num = static_cast<int64_t>(r * 10000.0 + 0.5);
        if (num < 1) num = 1;
        int64_t den = 10000;
        int64_t g = std::gcd(num, den);
        rate_num = static_cast<uint16_t>(num / g);
        rate_den = static_cast<uint16_t>(den / g);
    }

    // Latent channel count m = ceil(r * 4^T): r*H*W coefficients spread over
    // the (H/2^T)*(W/2^T) grid, rounded up so the rate is never undershot.
    int latent_channels() const {
        const int64_t cells = int64_t{1} << (2 * stages);
        const int64_t m = (static_cast<int64_t>(rate_num) * cells + rate_den - 1) / rate_den;
        require(m >= 1, ErrorKind::Config, "sampling rate too small for stage count");
        require(m <= 4096, ErrorKind::Config, "latent channel count implausibly large");
        return static_cast<int>(m);
    }

    int grid_divisor() const { return 1 << stages; }

    void validate() const {
        require(stages >= 1 && stages <= 6, ErrorKind::Config, "stages must be in [1,6]");
        require(rate_num >= 1 && rate_den >= 1 && rate_num <= rate_den, ErrorKind::Config,
                "sampling rate must be in (0,1]");
        require(q_step > 0.0, ErrorKind::Config, "q_step must be positive");
        require(qcm_blocks >= 1, ErrorKind::Config, "qcm_blocks must be >= 1");
        require(predictor_width >= 1 && predictor_width <= 256, ErrorKind::Config,
                "predictor_width must be in [1,256]");
        (void)latent_channels();
    }
};

enum class TrainMode : uint8_t { Dataset = 0, SingleImage = 1 };

struct TrainConfig {
    CodecConfig codec;
    TrainMode mode = TrainMode::Dataset;
    double lr = 1e-4;
    double lr_decay_factor = 0.5;
    int lr_decay_every = 30; // epochs
    int epochs = 100;
    int batch_size = 16;
    uint64_t seed = 1;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const {
        codec.validate();
        require(lr >= 0.0, ErrorKind::Config, "lr must be non-negative");
        require(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0, ErrorKind::Config,
                "lr_decay_factor must be in (0,1]");
        require(lr_decay_every >= 1, ErrorKind::Config, "lr_decay_every must be >= 1");
        require(epochs >= 1, ErrorKind::Config, "epochs must be >= 1");
        require(batch_size >= 1, ErrorKind::Config, "batch_size must be >= 1");
        require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0 &&
                    adam_eps > 0.0,
                ErrorKind::Config, "adam parameters out of range");
    }

    // Paper defaults: 24 residual blocks for dataset compression, 3 for
    // single-image compression.
    static int default_qcm_blocks(TrainMode m) { return m == TrainMode::Dataset ? 24 : 3; }
};

} // namespace lvp
