#include "lvp/container.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "lvp/bytes.hpp"
#include "lvp/huffman.hpp"
#include "lvp/quantizer.hpp"
#include "lvp/range_coder.hpp"

namespace lvp {

namespace {
constexpr uint8_t kContainerVersion = 1;
constexpr char kMagic[4] = {'L', 'V', 'P', 'N'};

Tensor normalize(const Image8& img) {
    Tensor x({1, img.h, img.w});
    for (size_t i = 0; i < img.pixels.size(); ++i) x.data[i] = img.pixels[i] / 255.0;
    return x;
}

} // namespace

Image8 pad_replicate(const Image8& img, int divisor) {
    const int hp = (img.h + divisor - 1) / divisor * divisor;
    const int wp = (img.w + divisor - 1) / divisor * divisor;
    Image8 out;
    out.h = hp;
    out.w = wp;
    out.pixels.resize(static_cast<size_t>(hp) * wp);
    for (int y = 0; y < hp; ++y) {
        const int sy = y < img.h ? y : img.h - 1;
        for (int x = 0; x < wp; ++x) {
            const int sx = x < img.w ? x : img.w - 1;
            out.pixels[static_cast<size_t>(y) * wp + x] = img.at(sy, sx);
        }
    }
    return out;
}

CompressedContainer compress_image(const Image8& img, const LvpModel& model,
                                   uint64_t model_hash) {
    require(img.h >= 8 && img.h <= 4096 && img.w >= 8 && img.w <= 4096, ErrorKind::Config,
            "compress: image extents must be within [8, 4096]");
    require(img.pixels.size() == static_cast<size_t>(img.h) * img.w, ErrorKind::Config,
            "compress: pixel buffer does not match dimensions");

    const CodecConfig& cfg = model.cfg;
    const int div = cfg.grid_divisor();
    const Image8 padded = pad_replicate(img, div);
    const int hp = padded.h, wp = padded.w;

    // Analysis path: image -> latent coefficients -> integer latent.
    Tensor y = model.latent_forward(normalize(padded));
    QuantizedLatent zq = quantize(y, cfg.q_step);

    std::map<int32_t, int64_t> hist;
    for (int32_t v : zq.z) ++hist[v];
    HuffmanTable table = huffman_build(hist);
    BitStream latent_bits = huffman_encode(zq.z, table);

    // Synthesis path, identical to the decoder: z -> compensated features ->
    // per-pixel distributions -> range coder, original region only.
    Tensor comp = model.compensated_from_z(zq);
    RangeEncoder enc;
    Tensor stripe;
    int cached_row = -1;
    std::vector<double> column(256);
    const int64_t stripe_plane = static_cast<int64_t>(div) * wp;
    for (int py = 0; py < img.h; ++py) {
        const int gy = py / div;
        if (gy != cached_row) {
            stripe = model.stripe_probs(comp, gy);
            cached_row = gy;
        }
        const int sy = py - gy * div;
        for (int px = 0; px < img.w; ++px) {
            for (int v = 0; v < 256; ++v)
                column[v] =
                    stripe.data[static_cast<size_t>(v) * stripe_plane + sy * static_cast<int64_t>(wp) + px];
            const FrequencyTable ft = quantize_probs(column.data());
            const int s = img.at(py, px);
            enc.encode(ft.cum_before(s), ft.freq[s]);
        }
    }
    BitStream pixel_bits = enc.finish();

    CompressedContainer c;
    c.orig_h = static_cast<uint16_t>(img.h);
    c.orig_w = static_cast<uint16_t>(img.w);
    c.pad_h = static_cast<uint8_t>(hp - img.h);
    c.pad_w = static_cast<uint8_t>(wp - img.w);
    c.model_hash = model_hash;
    c.latent_bits = latent_bits.bit_count;
    c.pixel_bits = pixel_bits.bit_count;
    c.header_bytes = kContainerHeaderBytes;

    ByteWriter w;
    w.bytes(reinterpret_cast<const uint8_t*>(kMagic), 4);
    w.u8(kContainerVersion);
    w.u16(c.orig_h);
    w.u16(c.orig_w);
    w.u8(c.pad_h);
    w.u8(c.pad_w);
    w.f64(cfg.q_step);
    w.u16(cfg.rate_num);
    w.u16(cfg.rate_den);
    w.u8(static_cast<uint8_t>(cfg.stages));
    w.u64(model_hash);

    const size_t latent_start = w.size();
    huffman_serialize(table, w);
    w.u32(static_cast<uint32_t>(zq.z.size()));
    w.u32(static_cast<uint32_t>(latent_bits.bit_count));
    w.bytes(latent_bits.bytes);
    c.latent_section_bytes = w.size() - latent_start;

    const size_t pixel_start = w.size();
    w.u32(static_cast<uint32_t>(pixel_bits.bit_count));
    w.bytes(pixel_bits.bytes);
    c.pixel_section_bytes = w.size() - pixel_start;

    c.bytes = w.take();
    return c;
}

Image8 decompress_image(const std::vector<uint8_t>& container_bytes, const LvpModel& model,
                        uint64_t model_hash) {
    ByteReader r(container_bytes.data(), container_bytes.size(), ErrorKind::CorruptStream,
                 "container");
    auto magic = r.bytes(4);
    require(std::memcmp(magic.data(), kMagic, 4) == 0, ErrorKind::CorruptStream,
            "container: magic mismatch (not an .lvp file)");
    require(r.u8() == kContainerVersion, ErrorKind::CorruptStream,
            "container: unsupported version");
    const int orig_h = r.u16();
    const int orig_w = r.u16();
    const int pad_h = r.u8();
    const int pad_w = r.u8();
    const double q_step = r.f64();
    const uint16_t rate_num = r.u16();
    const uint16_t rate_den = r.u16();
    const int stages = r.u8();
    const uint64_t stored_hash = r.u64();

    require(stored_hash == model_hash, ErrorKind::HashMismatch,
            "container: model hash mismatch (compressed with a different model)");
    const CodecConfig& cfg = model.cfg;
    require(q_step == cfg.q_step && rate_num == cfg.rate_num && rate_den == cfg.rate_den &&
                stages == cfg.stages,
            ErrorKind::CorruptStream, "container: header disagrees with model configuration");

    const int div = cfg.grid_divisor();
    const int hp = orig_h + pad_h;
    const int wp = orig_w + pad_w;
    require(orig_h >= 8 && orig_w >= 8 && hp % div == 0 && wp % div == 0, ErrorKind::CorruptStream,
            "container: inconsistent geometry");

    HuffmanTable table = huffman_deserialize(r);
    const uint32_t symbol_count = r.u32();
    const int g_h = hp / div, g_w = wp / div;
    const int m = cfg.latent_channels();
    require(symbol_count == static_cast<uint32_t>(m) * g_h * g_w, ErrorKind::CorruptStream,
            "container: latent symbol count does not match geometry");
    const uint32_t latent_bit_count = r.u32();
    BitStream latent_bits;
    latent_bits.bit_count = latent_bit_count;
    latent_bits.bytes = r.bytes((latent_bit_count + 7) / 8);

    const uint32_t pixel_bit_count = r.u32();
    BitStream pixel_bits;
    pixel_bits.bit_count = pixel_bit_count;
    pixel_bits.bytes = r.bytes((pixel_bit_count + 7) / 8);
    require(r.remaining() == 0, ErrorKind::CorruptStream, "container: trailing bytes");

    QuantizedLatent zq;
    zq.shape = {m, g_h, g_w};
    zq.q_step = q_step;
    zq.z = huffman_decode(latent_bits, table, symbol_count);

    // Mirror of the encoder's synthesis path.
    Tensor comp = model.compensated_from_z(zq);
    Image8 out;
    out.h = orig_h;
    out.w = orig_w;
    out.pixels.resize(static_cast<size_t>(orig_h) * orig_w);

    RangeDecoder dec(pixel_bits);
    Tensor stripe;
    int cached_row = -1;
    std::vector<double> column(256);
    const int64_t stripe_plane = static_cast<int64_t>(div) * wp;
    for (int py = 0; py < orig_h; ++py) {
        const int gy = py / div;
        if (gy != cached_row) {
            stripe = model.stripe_probs(comp, gy);
            cached_row = gy;
        }
        const int sy = py - gy * div;
        for (int px = 0; px < orig_w; ++px) {
            for (int v = 0; v < 256; ++v)
                column[v] =
                    stripe.data[static_cast<size_t>(v) * stripe_plane + sy * static_cast<int64_t>(wp) + px];
            const FrequencyTable ft = quantize_probs(column.data());
            const uint32_t target = dec.decode_freq();
            uint32_t cum = 0;
            int sym = 0;
            for (; sym < 256; ++sym) {
                const uint32_t f = ft.freq[sym];
                if (target < cum + f) break;
                cum += f;
            }
            require(sym < 256, ErrorKind::CorruptStream, "container: pixel decode failed");
            dec.consume(cum, ft.freq[sym]);
            out.pixels[static_cast<size_t>(py) * orig_w + px] = static_cast<uint8_t>(sym);
        }
    }
    return out;
}

double container_bpp(const CompressedContainer& c) {
    return 8.0 * static_cast<double>(c.bytes.size()) /
           (static_cast<double>(c.orig_h) * c.orig_w);
}

double pixel_stream_bpp(const CompressedContainer& c) {
    return static_cast<double>(c.pixel_bits) / (static_cast<double>(c.orig_h) * c.orig_w);
}

void write_container(const CompressedContainer& c, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), ErrorKind::Io, "cannot open container for writing: " + path);
    f.write(reinterpret_cast<const char*>(c.bytes.data()),
            static_cast<std::streamsize>(c.bytes.size()));
    require(f.good(), ErrorKind::Io, "failed writing container: " + path);
}

std::vector<uint8_t> read_container_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), ErrorKind::Io, "cannot open container: " + path);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

} // namespace lvp
