#include "lvp/range_coder.hpp"

#include <algorithm>
#include <cmath>

#include "lvp/predictor.hpp"

namespace lvp {

namespace {
constexpr uint32_t kRenormBound = 1u << 24;
}

// --- frequency quantization ---------------------------------------------------

FrequencyTable quantize_probs(const double* probs256) {
    FrequencyTable out;
    int32_t freq[256];
    double remainder[256];
    int64_t total = 0;
    for (int v = 0; v < 256; ++v) {
        const double scaled = probs256[v] * 65536.0;
        double fl = std::floor(scaled);
        remainder[v] = scaled - fl;
        int32_t f = static_cast<int32_t>(fl);
        if (f < 1) f = 1;
        if (f > static_cast<int32_t>(kFreqTotal)) f = kFreqTotal;
        freq[v] = f;
        total += f;
    }

    int64_t deficit = static_cast<int64_t>(kFreqTotal) - total;
    if (deficit > 0) {
        // Hand out one unit each to the largest remainders.
        int idx[256];
        for (int v = 0; v < 256; ++v) idx[v] = v;
        std::sort(idx, idx + 256, [&](int a, int b) {
            if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
            return a < b;
        });
        for (int k = 0; k < 256 && deficit > 0; ++k, --deficit) ++freq[idx[k]];
        require(deficit == 0, ErrorKind::Codec, "quantize_probs: unresolvable deficit");
    } else if (deficit < 0) {
        // Claw back the overshoot (from the >=1 clamps) starting at the
        // smallest remainders, never driving an entry below 1.
        int idx[256];
        for (int v = 0; v < 256; ++v) idx[v] = v;
        std::sort(idx, idx + 256, [&](int a, int b) {
            if (remainder[a] != remainder[b]) return remainder[a] < remainder[b];
            return a < b;
        });
        for (int k = 0; k < 256 && deficit < 0; ++k) {
            const int v = idx[k];
            const int64_t take = std::min<int64_t>(-deficit, freq[v] - 1);
            freq[v] -= static_cast<int32_t>(take);
            deficit += take;
        }
        require(deficit == 0, ErrorKind::Codec, "quantize_probs: unresolvable surplus");
    }

    for (int v = 0; v < 256; ++v) out.freq[v] = static_cast<uint16_t>(freq[v]);
    return out;
}

// --- encoder -------------------------------------------------------------------

void RangeEncoder::shift_low() {
    const uint32_t lo32 = static_cast<uint32_t>(low_);
    const uint32_t carry = static_cast<uint32_t>(low_ >> 32);
    if (carry != 0 || lo32 < 0xFF000000u) {
        if (first_)
            first_ = false; // initial cache byte is always zero; drop it
        else
            out_.push_back(static_cast<uint8_t>(cache_ + carry));
        while (pending_ > 0) {
            out_.push_back(static_cast<uint8_t>(0xFFu + carry));
            --pending_;
        }
        cache_ = static_cast<uint8_t>(lo32 >> 24);
    } else {
        ++pending_;
    }
    low_ = (static_cast<uint64_t>(lo32) & 0x00FFFFFFull) << 8;
}

void RangeEncoder::encode(uint32_t cum, uint32_t freq, uint32_t total) {
    require(total >= 1 && total <= kFreqTotal, ErrorKind::Codec,
            "range encoder: total out of range");
    require(freq >= 1 && cum + freq <= total, ErrorKind::Codec,
            "range encoder: empty or overflowing symbol interval");
    const uint32_t r = range_ / total;
    low_ += static_cast<uint64_t>(cum) * r;
    range_ = r * freq;
    while (range_ < kRenormBound) {
        shift_low();
        range_ <<= 8;
    }
}

BitStream RangeEncoder::finish() {
    for (int i = 0; i < 5; ++i) shift_low();
    BitStream out;
    out.bit_count = static_cast<uint64_t>(out_.size()) * 8;
    out.bytes = std::move(out_);
    return out;
}

// --- decoder -------------------------------------------------------------------

RangeDecoder::RangeDecoder(const BitStream& bits) : bits_(bits) {
    for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

uint8_t RangeDecoder::next_byte() {
    require(pos_ < bits_.bytes.size(), ErrorKind::CorruptStream,
            "range decoder: stream truncated");
    return bits_.bytes[pos_++];
}

uint32_t RangeDecoder::decode_freq(uint32_t total) {
    range_ /= total;
    uint32_t v = code_ / range_;
    // Values in the truncation remainder clamp onto the top interval.
    return v < total ? v : total - 1;
}

void RangeDecoder::consume(uint32_t cum, uint32_t freq) {
    code_ -= cum * range_;
    range_ *= freq;
    while (range_ < kRenormBound) {
        code_ = (code_ << 8) | next_byte();
        range_ <<= 8;
    }
}

// --- sequence wrappers ----------------------------------------------------------

BitStream arith_encode(const std::vector<int>& symbols, const std::vector<FrequencyTable>& freqs) {
    require(symbols.size() == freqs.size(), ErrorKind::Codec,
            "arith_encode: one frequency table per symbol required");
    RangeEncoder enc;
    for (size_t i = 0; i < symbols.size(); ++i) {
        const int s = symbols[i];
        require(s >= 0 && s < 256, ErrorKind::Codec, "arith_encode: symbol out of alphabet");
        const uint32_t f = freqs[i].freq[s];
        require(f >= 1, ErrorKind::Codec, "arith_encode: zero frequency for actual symbol");
        enc.encode(freqs[i].cum_before(s), f);
    }
    return enc.finish();
}

void fill_pixel_frequencies(PixelDistribution& dist) {
    require(dist.probs.shape.size() == 3 && dist.probs.dim(0) == 256, ErrorKind::Codec,
            "fill_pixel_frequencies: probs must be (256,H,W)");
    const int64_t plane = static_cast<int64_t>(dist.probs.dim(1)) * dist.probs.dim(2);
    dist.freq.assign(static_cast<size_t>(plane) * 256, 0);
    std::vector<double> column(256);
    for (int64_t i = 0; i < plane; ++i) {
        for (int v = 0; v < 256; ++v) column[v] = dist.probs.data[static_cast<size_t>(v) * plane + i];
        const FrequencyTable t = quantize_probs(column.data());
        for (int v = 0; v < 256; ++v) dist.freq[static_cast<size_t>(i) * 256 + v] = t.freq[v];
    }
}

std::vector<int> arith_decode(const BitStream& bits, const std::vector<FrequencyTable>& freqs,
                              size_t count) {
    require(count == freqs.size(), ErrorKind::Codec,
            "arith_decode: one frequency table per symbol required");
    std::vector<int> out;
    out.reserve(count);
    RangeDecoder dec(bits);
    for (size_t i = 0; i < count; ++i) {
        const uint32_t target = dec.decode_freq();
        uint32_t cum = 0;
        int sym = 0;
        for (; sym < 256; ++sym) {
            const uint32_t f = freqs[i].freq[sym];
            if (target < cum + f) break;
            cum += f;
        }
        require(sym < 256, ErrorKind::CorruptStream, "arith_decode: no interval matched");
        dec.consume(cum, freqs[i].freq[sym]);
        out.push_back(sym);
    }
    return out;
}

} // namespace lvp
