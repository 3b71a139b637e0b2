#include "lvp/model.hpp"

#include <fstream>

#include "lvp/bytes.hpp"

namespace lvp {

LvpModel LvpModel::make(const CodecConfig& cfg, uint64_t init_seed) {
    cfg.validate();
    LvpModel m;
    m.cfg = cfg;
    // Independent init streams per module: ablation variants that drop or
    // swap one module keep the others' initial weights identical, so
    // shared-seed comparisons are paired.
    Rng gmsm_rng(init_seed ^ 0x676d736d00000001ull);
    Rng qcm_rng(init_seed ^ 0x71636d0000000002ull);
    Rng pred_rng(init_seed ^ 0x7072656400000003ull);
    m.gmsm = Gmsm::make(cfg, gmsm_rng);
    if (cfg.use_qcm)
        m.qcm = Qcm::make(cfg.latent_channels(), cfg.qcm_blocks, cfg.q_step, qcm_rng);
    m.predictor = Predictor::make(cfg, pred_rng);
    return m;
}

std::vector<Parameter*> LvpModel::params() {
    std::vector<Parameter*> out;
    gmsm.collect(out);
    if (qcm) qcm->collect(out);
    predictor.collect(out);
    return out;
}

std::vector<const Parameter*> LvpModel::params() const {
    auto ps = const_cast<LvpModel*>(this)->params();
    return {ps.begin(), ps.end()};
}

void LvpModel::zero_grads() {
    for (auto* p : params()) p->zero_grad();
}

LvpModel LvpModel::clone() const {
    LvpModel copy = make(cfg, 0);
    copy.copy_values_from(*this);
    return copy;
}

void LvpModel::copy_values_from(const LvpModel& other) {
    auto dst = params();
    auto src = const_cast<LvpModel&>(other).params();
    require(dst.size() == src.size(), ErrorKind::Config, "model copy: parameter count mismatch");
    for (size_t i = 0; i < dst.size(); ++i) {
        require(dst[i]->value().shape == src[i]->value().shape, ErrorKind::Config,
                "model copy: shape mismatch at " + dst[i]->name);
        dst[i]->value().data = src[i]->value().data;
    }
}

LvpModel::TrainForward LvpModel::training_graph(const Tensor& x_norm,
                                                const std::vector<uint8_t>& target_plane,
                                                int valid_h, int valid_w, bool smooth_quant) {
    Var x = Var::leaf(x_norm, false);
    Var y = gmsm.forward(x);
    Var y_hat = quantize_dequantize_ste(y, cfg.q_step, smooth_quant);
    Var comp = qcm ? qcm->forward(y_hat) : y_hat;
    Var logits = predictor.forward(comp);
    auto sb = softmax_bits(logits, target_plane, valid_h, valid_w);
    return {sb.loss, sb.probs};
}

Tensor LvpModel::latent_forward(const Tensor& x_norm) const {
    NoGradGuard ng;
    return gmsm.forward(Var::leaf(x_norm)).value();
}

Tensor LvpModel::decode_probs(const QuantizedLatent& zq) const {
    NoGradGuard ng;
    Var comp = Var::leaf(compensated_from_z(zq));
    Tensor logits = predictor.forward(comp).value();
    return floored_probs(softmax_channels(logits));
}

PixelDistribution LvpModel::predict(const QuantizedLatent& zq, int target_h, int target_w) const {
    require(zq.shape.size() == 3 && zq.shape[0] == cfg.latent_channels(), ErrorKind::Codec,
            "predict: latent shape does not match the model");
    const int div = cfg.grid_divisor();
    const int hp = zq.shape[1] * div, wp = zq.shape[2] * div;
    require(target_h >= 1 && target_h <= hp && target_h > hp - div && target_w >= 1 &&
                target_w <= wp && target_w > wp - div,
            ErrorKind::Codec, "predict: target shape inconsistent with latent grid");
    PixelDistribution dist;
    dist.probs = decode_probs(zq);
    return dist;
}

Tensor LvpModel::compensated_from_z(const QuantizedLatent& zq) const {
    NoGradGuard ng;
    Var y_hat = Var::leaf(dequantize(zq));
    return qcm ? qcm->forward(y_hat).value() : y_hat.value();
}

Tensor LvpModel::stripe_probs(const Tensor& comp, int grid_row) const {
    NoGradGuard ng;
    const int m = comp.dim(0), g_h = comp.dim(1), g_w = comp.dim(2);
    require(grid_row >= 0 && grid_row < g_h, ErrorKind::Codec, "stripe_probs: row out of range");
    Tensor row({m, 1, g_w});
    for (int c = 0; c < m; ++c)
        std::copy(&comp.data[(static_cast<size_t>(c) * g_h + grid_row) * g_w],
                  &comp.data[(static_cast<size_t>(c) * g_h + grid_row) * g_w] + g_w,
                  &row.data[static_cast<size_t>(c) * g_w]);
    Tensor logits = predictor.forward(Var::leaf(std::move(row))).value();
    return floored_probs(softmax_channels(logits));
}

LvpModel::FeatureDump LvpModel::feature_dump(const Tensor& x_norm) const {
    NoGradGuard ng;
    FeatureDump out;
    Var f = Var::leaf(x_norm);
    for (int t = 0; t < gmsm.stages; ++t) {
        f = gmsm.stage(f, t);
        out.stage_features.push_back(f.value());
    }
    out.latent = latent_forward(x_norm);
    QuantizedLatent zq = quantize(out.latent, cfg.q_step);
    out.dequantized = dequantize(zq);
    Var y_hat = Var::leaf(out.dequantized);
    out.compensated = qcm ? qcm->forward(y_hat).value() : out.dequantized;
    return out;
}

// --- serialization -----------------------------------------------------------

namespace {
constexpr uint8_t kModelVersion = 1;
constexpr char kModelMagic[4] = {'L', 'V', 'P', 'M'};
} // namespace

std::vector<uint8_t> serialize_model(const LvpModel& model) {
    ByteWriter w;
    w.bytes(reinterpret_cast<const uint8_t*>(kModelMagic), 4);
    w.u8(kModelVersion);
    w.u8(static_cast<uint8_t>(model.cfg.stages));
    w.u16(model.cfg.rate_num);
    w.u16(model.cfg.rate_den);
    w.f64(model.cfg.q_step);
    w.u16(static_cast<uint16_t>(model.cfg.qcm_blocks));
    w.u16(static_cast<uint16_t>(model.cfg.predictor_width));
    w.u8(static_cast<uint8_t>(model.cfg.sampling));
    w.u8(model.cfg.use_qcm ? 1 : 0);

    auto ps = model.params();
    w.u32(static_cast<uint32_t>(ps.size()));
    for (const auto* p : ps) {
        w.str(p->name);
        const Tensor& t = p->value();
        w.u8(static_cast<uint8_t>(t.shape.size()));
        for (int d : t.shape) w.u32(static_cast<uint32_t>(d));
        for (double v : t.data) w.f64(v);
    }
    return w.take();
}

uint64_t save_model(const LvpModel& model, const std::string& path) {
    auto body = serialize_model(model);
    const uint64_t hash = fnv1a64(body.data(), body.size());
    ByteWriter tail;
    tail.u64(hash);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), ErrorKind::Io, "cannot open model file for writing: " + path);
    f.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
    f.write(reinterpret_cast<const char*>(tail.data().data()), 8);
    require(f.good(), ErrorKind::Io, "failed writing model file: " + path);
    return hash;
}

LoadedModel parse_model(const std::vector<uint8_t>& file_bytes) {
    require(file_bytes.size() > 8, ErrorKind::CorruptStream, "model file: too short");
    const size_t body_len = file_bytes.size() - 8;
    ByteReader tail(file_bytes.data() + body_len, 8, ErrorKind::CorruptStream, "model file");
    const uint64_t stored_hash = tail.u64();
    const uint64_t actual = fnv1a64(file_bytes.data(), body_len);
    require(stored_hash == actual, ErrorKind::CorruptStream,
            "model file: content hash mismatch (file damaged or truncated)");

    ByteReader r(file_bytes.data(), body_len, ErrorKind::CorruptStream, "model file");
    auto magic = r.bytes(4);
    require(std::memcmp(magic.data(), kModelMagic, 4) == 0, ErrorKind::CorruptStream,
            "model file: bad magic");
    require(r.u8() == kModelVersion, ErrorKind::CorruptStream, "model file: unknown version");

    CodecConfig cfg;
    cfg.stages = r.u8();
    cfg.rate_num = r.u16();
    cfg.rate_den = r.u16();
    cfg.q_step = r.f64();
    cfg.qcm_blocks = r.u16();
    cfg.predictor_width = r.u16();
    cfg.sampling = static_cast<Sampling>(r.u8());
    cfg.use_qcm = r.u8() != 0;
    cfg.validate();

    LoadedModel out{LvpModel::make(cfg, 0), stored_hash};
    auto ps = out.model.params();
    const uint32_t count = r.u32();
    require(count == ps.size(), ErrorKind::CorruptStream,
            "model file: parameter count does not match architecture");
    for (auto* p : ps) {
        const std::string name = r.str();
        require(name == p->name, ErrorKind::CorruptStream,
                "model file: unexpected parameter " + name);
        const uint8_t nd = r.u8();
        require(nd == p->value().shape.size(), ErrorKind::CorruptStream,
                "model file: rank mismatch for " + name);
        for (int d : p->value().shape)
            require(r.u32() == static_cast<uint32_t>(d), ErrorKind::CorruptStream,
                    "model file: shape mismatch for " + name);
        for (double& v : p->value().data) v = r.f64();
    }
    require(r.remaining() == 0, ErrorKind::CorruptStream, "model file: trailing bytes");
    return out;
}

LoadedModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), ErrorKind::Io, "cannot open model file: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    return parse_model(bytes);
}

} // namespace lvp
