#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "lvp/bitstream.hpp"
#include "lvp/bytes.hpp"

namespace lvp {

// Canonical prefix code over arbitrary int32 symbols. Codes are derivable
// from (sorted symbols, code lengths) alone, which is all the container
// stores. A single-symbol alphabet gets code length 1.
struct HuffmanTable {
    std::vector<int32_t> symbols;     // sorted ascending
    std::vector<uint8_t> code_lengths; // parallel to symbols
    std::vector<uint64_t> codes;      // canonical, derived

    size_t size() const { return symbols.size(); }
};

// Optimal code by the two-least-frequent merge; ties broken by (count,
// smallest symbol in subtree, leaves before internal nodes) so the same
// histogram always yields the same table.
HuffmanTable huffman_build(const std::map<int32_t, int64_t>& histogram);

// Recompute canonical codes from symbols + lengths (after deserialization).
void huffman_assign_codes(HuffmanTable& table);

BitStream huffman_encode(const std::vector<int32_t>& values, const HuffmanTable& table);
std::vector<int32_t> huffman_decode(const BitStream& bits, const HuffmanTable& table,
                                    size_t count);

void huffman_serialize(const HuffmanTable& table, ByteWriter& w);
HuffmanTable huffman_deserialize(ByteReader& r);

} // namespace lvp
