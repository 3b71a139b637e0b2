#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lvp/model.hpp"
#include "lvp/pgm.hpp"

namespace lvp {

// On-disk artifact (".lvp", all integers little-endian):
//   0   magic "LVPN"
//   4   version u8
//   5   orig_h u16, orig_w u16
//   9   pad_h u8, pad_w u8
//  11   q_step f64
//  19   rate_num u16, rate_den u16
//  23   stage_count u8
//  24   model_hash u64
//  32   latent section: huffman table (u32 nsym, syms u32[], lens u8[]),
//       u32 symbol_count, u32 bit_count, payload bytes
//   -   pixel section: u32 bit_count, payload bytes
struct CompressedContainer {
    std::vector<uint8_t> bytes;

    uint16_t orig_h = 0, orig_w = 0;
    uint8_t pad_h = 0, pad_w = 0;
    uint64_t model_hash = 0;
    uint64_t latent_bits = 0;
    uint64_t pixel_bits = 0;
    size_t header_bytes = 0;
    size_t latent_section_bytes = 0;
    size_t pixel_section_bytes = 0;
};

inline constexpr size_t kContainerHeaderBytes = 32;

// Replicate the bottom row / right column up to multiples of 2^stages.
Image8 pad_replicate(const Image8& img, int divisor);

CompressedContainer compress_image(const Image8& img, const LvpModel& model,
                                   uint64_t model_hash);
Image8 decompress_image(const std::vector<uint8_t>& container_bytes, const LvpModel& model,
                        uint64_t model_hash);

double container_bpp(const CompressedContainer& c);
double pixel_stream_bpp(const CompressedContainer& c);

void write_container(const CompressedContainer& c, const std::string& path);
std::vector<uint8_t> read_container_bytes(const std::string& path);

} // namespace lvp
