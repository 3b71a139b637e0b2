#include "lvp/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>

#include "lvp/mathfn.hpp"
#include "lvp/rng.hpp"
#include "lvp/threading.hpp"

namespace lvp {

namespace {

struct PreparedImage {
    Tensor x_norm;               // (1, Hp, Wp)
    std::vector<uint8_t> target; // padded plane
    int valid_h = 0, valid_w = 0;
};

PreparedImage prepare(const Image8& img, int divisor) {
    Image8 padded = pad_replicate(img, divisor);
    PreparedImage p;
    p.x_norm = Tensor({1, padded.h, padded.w});
    for (size_t i = 0; i < padded.pixels.size(); ++i) p.x_norm.data[i] = padded.pixels[i] / 255.0;
    p.target = padded.pixels;
    p.valid_h = img.h;
    p.valid_w = img.w;
    return p;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

} // namespace

TrainResult train(const Corpus& corpus, const TrainConfig& cfg, std::ostream* progress) {
    cfg.validate();
    require(!corpus.images.empty(), ErrorKind::Config, "train: empty corpus");
    if (cfg.mode == TrainMode::SingleImage)
        require(corpus.images.size() == 1, ErrorKind::Config,
                "train: single-image mode expects exactly one image");
    for (const auto& img : corpus.images)
        require(img.h >= 8 && img.w >= 8 && img.h <= 4096 && img.w <= 4096, ErrorKind::Config,
                "train: image extents must be within [8, 4096]");

    TrainResult result{LvpModel::make(cfg.codec, cfg.seed), {}};
    auto master_params = result.model.params();

    const int div = cfg.codec.grid_divisor();
    std::vector<PreparedImage> prepared;
    prepared.reserve(corpus.images.size());
    int64_t total_pixels = 0;
    for (const auto& img : corpus.images) {
        prepared.push_back(prepare(img, div));
        total_pixels += static_cast<int64_t>(img.h) * img.w;
    }

    // Same-size bucketing; batches never mix shapes.
    std::map<std::pair<int, int>, std::vector<size_t>> buckets;
    for (size_t i = 0; i < prepared.size(); ++i)
        buckets[{prepared[i].x_norm.dim(1), prepared[i].x_norm.dim(2)}].push_back(i);

    // Worker replicas share nothing with the master model; per-image grads
    // land in indexed slots and are reduced in image order, so results do
    // not depend on the worker count.
    const int workers = worker_count();
    std::vector<LvpModel> replicas;
    replicas.reserve(workers);
    for (int w = 0; w < workers; ++w) replicas.push_back(result.model.clone());

    Rng shuffle_rng(cfg.seed ^ 0x51e9d3a7c0ffee01ull);
    AdamConfig adam;
    adam.lr = cfg.lr;
    adam.beta1 = cfg.adam_beta1;
    adam.beta2 = cfg.adam_beta2;
    adam.eps = cfg.adam_eps;
    double cur_lr = cfg.lr;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (epoch > 0 && epoch % cfg.lr_decay_every == 0) cur_lr *= cfg.lr_decay_factor;
        adam.lr = cur_lr;

        std::vector<size_t> schedule;
        for (auto& [key, idxs] : buckets) {
            for (size_t i = idxs.size(); i > 1; --i)
                std::swap(idxs[i - 1], idxs[shuffle_rng.next_below(i)]);
            schedule.insert(schedule.end(), idxs.begin(), idxs.end());
        }

        double epoch_bits = 0.0;
        size_t pos = 0;
        while (pos < schedule.size()) {
            // Batch stops at a bucket boundary (shapes differ across buckets).
            size_t batch_n = 1;
            const auto shape_of = [&](size_t i) {
                return std::pair<int, int>{prepared[i].x_norm.dim(1), prepared[i].x_norm.dim(2)};
            };
            while (batch_n < static_cast<size_t>(cfg.batch_size) &&
                   pos + batch_n < schedule.size() &&
                   shape_of(schedule[pos + batch_n]) == shape_of(schedule[pos]))
                ++batch_n;

            for (auto& r : replicas) r.copy_values_from(result.model);

            std::vector<double> losses(batch_n, 0.0);
            std::vector<std::vector<std::vector<double>>> grads(batch_n);
            const int64_t chunk =
                (static_cast<int64_t>(batch_n) + workers - 1) / workers;
            parallel_for(workers, [&](int64_t w) {
                LvpModel& rep = replicas[w];
                auto rep_params = rep.params();
                const int64_t lo = w * chunk;
                const int64_t hi = std::min<int64_t>(lo + chunk, batch_n);
                for (int64_t k = lo; k < hi; ++k) {
                    const PreparedImage& pi = prepared[schedule[pos + k]];
                    rep.zero_grads();
                    auto fwd = rep.training_graph(pi.x_norm, pi.target, pi.valid_h, pi.valid_w);
                    losses[k] = fwd.loss.value().data[0];
                    backward(fwd.loss);
                    grads[k].reserve(rep_params.size());
                    for (auto* p : rep_params) grads[k].push_back(p->node->value.grad);
                }
            });

            double batch_bits = 0.0;
            for (double l : losses) batch_bits += l;
            require(std::isfinite(batch_bits), ErrorKind::Training,
                    "train: loss diverged (non-finite) at epoch " + std::to_string(epoch));
            epoch_bits += batch_bits;

            const double inv_n = 1.0 / static_cast<double>(batch_n);
            for (size_t pi = 0; pi < master_params.size(); ++pi) {
                std::vector<double> sum = grads[0][pi];
                for (size_t k = 1; k < batch_n; ++k) {
                    const auto& g = grads[k][pi];
                    for (size_t j = 0; j < sum.size(); ++j) sum[j] += g[j];
                }
                for (double& v : sum) v *= inv_n;
                adam_step(*master_params[pi], sum, adam);
            }
            pos += batch_n;
        }

        EpochLog log{epoch, epoch_bits / static_cast<double>(total_pixels), cur_lr};
        result.log.push_back(log);
        if (progress)
            (*progress) << "epoch\t" << log.epoch << "\t" << log.loss_bpp << "\t" << log.lr
                        << "\n";
    }
    return result;
}

double corpus_loss_bpp(const Corpus& corpus, LvpModel& model) {
    require(!corpus.images.empty(), ErrorKind::Config, "empty corpus");
    const int div = model.cfg.grid_divisor();
    double bits = 0.0;
    int64_t pixels = 0;
    for (const auto& img : corpus.images) {
        PreparedImage pi = prepare(img, div);
        auto fwd = model.training_graph(pi.x_norm, pi.target, pi.valid_h, pi.valid_w);
        bits += fwd.loss.value().data[0];
        pixels += static_cast<int64_t>(img.h) * img.w;
    }
    return bits / static_cast<double>(pixels);
}

EvalReport evaluate(const Corpus& corpus, const LvpModel& model, uint64_t model_hash,
                    size_t model_file_bytes, int timing_reps) {
    require(!corpus.images.empty(), ErrorKind::Config, "evaluate: empty corpus");
    require(timing_reps >= 1, ErrorKind::Config, "evaluate: timing_reps must be >= 1");

    EvalReport report;
    report.records.resize(corpus.images.size());
    parallel_for(static_cast<int64_t>(corpus.images.size()), [&](int64_t i) {
        const Image8& img = corpus.images[i];
        EvalRecord rec;
        rec.name = corpus.names[i];
        rec.h = img.h;
        rec.w = img.w;

        CompressedContainer c;
        std::vector<double> enc_times, dec_times;
        Image8 round;
        for (int rep = 0; rep < timing_reps; ++rep) {
            auto t0 = std::chrono::steady_clock::now();
            c = compress_image(img, model, model_hash);
            auto t1 = std::chrono::steady_clock::now();
            round = decompress_image(c.bytes, model, model_hash);
            auto t2 = std::chrono::steady_clock::now();
            enc_times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
            dec_times.push_back(std::chrono::duration<double, std::milli>(t2 - t1).count());
        }
        rec.container_bytes = c.bytes.size();
        rec.bpp = container_bpp(c);
        rec.pixel_bpp = pixel_stream_bpp(c);
        rec.bpp_with_model =
            8.0 * (static_cast<double>(c.bytes.size()) + static_cast<double>(model_file_bytes)) /
            (static_cast<double>(img.h) * img.w);
        rec.enc_ms = median_of(enc_times);
        rec.dec_ms = median_of(dec_times);
        rec.lossless = round.h == img.h && round.w == img.w && round.pixels == img.pixels;
        report.records[i] = std::move(rec);
    });

    report.all_lossless = true;
    for (const auto& r : report.records) {
        report.mean_bpp += r.bpp;
        report.mean_pixel_bpp += r.pixel_bpp;
        report.mean_bpp_with_model += r.bpp_with_model;
        report.mean_enc_ms += r.enc_ms;
        report.mean_dec_ms += r.dec_ms;
        report.all_lossless = report.all_lossless && r.lossless;
    }
    const double n = static_cast<double>(report.records.size());
    report.mean_bpp /= n;
    report.mean_pixel_bpp /= n;
    report.mean_bpp_with_model /= n;
    report.mean_enc_ms /= n;
    report.mean_dec_ms /= n;
    return report;
}

double marginal_entropy_bpp(const Corpus& corpus) {
    require(!corpus.images.empty(), ErrorKind::Config, "empty corpus");
    int64_t hist[256] = {};
    int64_t total = 0;
    for (const auto& img : corpus.images) {
        for (uint8_t p : img.pixels) ++hist[p];
        total += static_cast<int64_t>(img.pixels.size());
    }
    double h = 0.0;
    for (int v = 0; v < 256; ++v) {
        if (hist[v] == 0) continue;
        const double p = static_cast<double>(hist[v]) / static_cast<double>(total);
        h -= p * det_log2(p);
    }
    return h;
}

} // namespace lvp
