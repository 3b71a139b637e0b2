#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lvp/config.hpp"
#include "lvp/container.hpp"
#include "lvp/model.hpp"
#include "lvp/pgm.hpp"

namespace lvp {

struct EpochLog {
    int epoch = 0;
    double loss_bpp = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    LvpModel model;
    std::vector<EpochLog> log;
};

// Adam training of the full pipeline under the bits loss with straight-
// through quantization. Deterministic for a fixed seed: shuffling uses the
// project RNG, per-image gradients are reduced in image order regardless of
// worker count, and the optimizer step is serialized.
TrainResult train(const Corpus& corpus, const TrainConfig& cfg,
                  std::ostream* progress = nullptr);

// Mean bits/pixel of the corpus loss under the current model (no update).
double corpus_loss_bpp(const Corpus& corpus, LvpModel& model);

struct EvalRecord {
    std::string name;
    int h = 0, w = 0;
    size_t container_bytes = 0;
    double bpp = 0.0;            // whole container
    double pixel_bpp = 0.0;      // pixel stream only
    double bpp_with_model = 0.0; // container + amortized model file size
    double enc_ms = 0.0;
    double dec_ms = 0.0;
    bool lossless = false;
};

struct EvalReport {
    std::vector<EvalRecord> records;
    double mean_bpp = 0.0;
    double mean_pixel_bpp = 0.0;
    double mean_bpp_with_model = 0.0;
    double mean_enc_ms = 0.0;
    double mean_dec_ms = 0.0;
    bool all_lossless = false;
};

// Compress + decompress every image, verify byte equality, report both bpp
// accountings and median-of-`timing_reps` wall times per sample.
EvalReport evaluate(const Corpus& corpus, const LvpModel& model, uint64_t model_hash,
                    size_t model_file_bytes, int timing_reps);

// Zeroth-order baseline: entropy of the corpus-wide marginal pixel histogram.
double marginal_entropy_bpp(const Corpus& corpus);

} // namespace lvp
