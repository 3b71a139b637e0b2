#pragma once

#include <cstdint>
#include <vector>

#include "lvp/errors.hpp"

namespace lvp {

// Octet payload with an exact bit length; final partial byte is zero-padded.
struct BitStream {
    std::vector<uint8_t> bytes;
    uint64_t bit_count = 0;
};

// MSB-first bit packer.
class BitWriter {
public:
    void put_bit(uint32_t bit) {
        acc_ = static_cast<uint8_t>((acc_ << 1) | (bit & 1));
        if (++fill_ == 8) {
            out_.bytes.push_back(acc_);
            acc_ = 0;
            fill_ = 0;
        }
        ++out_.bit_count;
    }

    void put_bits(uint64_t value, int nbits) {
        for (int i = nbits - 1; i >= 0; --i) put_bit(static_cast<uint32_t>(value >> i) & 1);
    }

    BitStream finish() {
        if (fill_ > 0) {
            out_.bytes.push_back(static_cast<uint8_t>(acc_ << (8 - fill_)));
            acc_ = 0;
            fill_ = 0;
        }
        return std::move(out_);
    }

private:
    BitStream out_;
    uint8_t acc_ = 0;
    int fill_ = 0;
};

class BitReader {
public:
    explicit BitReader(const BitStream& s) : s_(s) {}

    uint32_t get_bit() {
        require(pos_ < s_.bit_count, ErrorKind::CorruptStream,
                "bitstream exhausted before all symbols were decoded");
        const uint32_t bit = (s_.bytes[pos_ >> 3] >> (7 - (pos_ & 7))) & 1;
        ++pos_;
        return bit;
    }

    uint64_t bits_read() const { return pos_; }

private:
    const BitStream& s_;
    uint64_t pos_ = 0;
};

} // namespace lvp
