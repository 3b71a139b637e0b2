#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lvp {

struct Image8 {
    int h = 0;
    int w = 0;
    std::vector<uint8_t> pixels; // row-major

    uint8_t at(int y, int x) const { return pixels[static_cast<size_t>(y) * w + x]; }
};

// Binary (P5) 8-bit PGM.
Image8 read_pgm(const std::string& path);
void write_pgm(const Image8& img, const std::string& path);

// Raw same-size corpus: 16-byte header ("LVPC", count, h, w as LE u32)
// followed by the concatenated planes.
std::vector<Image8> read_lvpc(const std::string& path);
void write_lvpc(const std::vector<Image8>& images, const std::string& path);

struct Corpus {
    std::vector<std::string> names;
    std::vector<Image8> images;

    size_t size() const { return images.size(); }
};

// Directory of *.pgm (sorted by filename) or a single .lvpc file.
Corpus load_corpus(const std::string& path);

} // namespace lvp
