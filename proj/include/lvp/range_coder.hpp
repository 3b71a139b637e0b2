#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lvp/bitstream.hpp"

namespace lvp {

// Integer frequency table for one coded symbol position. Totals are fixed at
// 2^16 so the 32-bit range register never underflows mid-symbol.
inline constexpr uint32_t kFreqTotalBits = 16;
inline constexpr uint32_t kFreqTotal = 1u << kFreqTotalBits;

struct FrequencyTable {
    std::array<uint16_t, 256> freq{}; // every entry >= 1, sums to 2^16

    uint32_t cum_before(int symbol) const {
        uint32_t c = 0;
        for (int v = 0; v < symbol; ++v) c += freq[v];
        return c;
    }
};

// Deterministic largest-remainder quantization of a 256-bin probability
// vector (floored upstream, so every bin is positive) to freq summing to
// exactly 2^16.
FrequencyTable quantize_probs(const double* probs256);

// Byte-oriented range coder: 64-bit low for carry propagation, 32-bit range,
// renormalization at 2^24. The encoder's first cache byte is suppressed and
// the decoder primes its window from the first four payload bytes.
class RangeEncoder {
public:
    void encode(uint32_t cum, uint32_t freq, uint32_t total = kFreqTotal);
    BitStream finish();

private:
    void shift_low();
    std::vector<uint8_t> out_;
    uint64_t low_ = 0;
    uint32_t range_ = 0xFFFFFFFFu;
    uint8_t cache_ = 0;
    int64_t pending_ = 0; // bytes held back for possible carry
    bool first_ = true;
};

class RangeDecoder {
public:
    explicit RangeDecoder(const BitStream& bits);

    // Scaled value in [0, total); caller finds the symbol interval, then
    // must call consume() with that interval.
    uint32_t decode_freq(uint32_t total = kFreqTotal);
    void consume(uint32_t cum, uint32_t freq);

private:
    uint8_t next_byte();
    const BitStream& bits_;
    size_t pos_ = 0;
    uint32_t range_ = 0xFFFFFFFFu;
    uint32_t code_ = 0;
};

// Sequence-level wrappers: one frequency table per symbol position.
BitStream arith_encode(const std::vector<int>& symbols,
                       const std::vector<FrequencyTable>& freqs);
std::vector<int> arith_decode(const BitStream& bits, const std::vector<FrequencyTable>& freqs,
                              size_t count);

// Materialize the integer tables for every pixel of a prediction (defined
// with the PixelDistribution type; implemented by this module).
struct PixelDistribution;
void fill_pixel_frequencies(PixelDistribution& dist);

} // namespace lvp
