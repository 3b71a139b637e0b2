#include "lvp/pgm.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "lvp/bytes.hpp"
#include "lvp/errors.hpp"

namespace fs = std::filesystem;

namespace lvp {

namespace {

// Reads the next PGM header token, skipping whitespace and # comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

} // namespace

Image8 read_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), ErrorKind::Io, "cannot open PGM file: " + path);
    require(next_token(f) == "P5", ErrorKind::Io, "not a binary PGM (P5): " + path);
    Image8 img;
    try {
        img.w = std::stoi(next_token(f));
        img.h = std::stoi(next_token(f));
        const int maxval = std::stoi(next_token(f));
        require(maxval > 0 && maxval <= 255, ErrorKind::Io,
                "only 8-bit PGM supported (maxval " + std::to_string(maxval) + "): " + path);
    } catch (const std::logic_error&) {
        raise(ErrorKind::Io, "malformed PGM header: " + path);
    }
    require(img.w >= 1 && img.h >= 1 && img.w <= 1 << 16 && img.h <= 1 << 16, ErrorKind::Io,
            "implausible PGM dimensions: " + path);
    // next_token consumed exactly one whitespace byte after maxval
    img.pixels.resize(static_cast<size_t>(img.h) * img.w);
    f.read(reinterpret_cast<char*>(img.pixels.data()),
           static_cast<std::streamsize>(img.pixels.size()));
    require(f.gcount() == static_cast<std::streamsize>(img.pixels.size()), ErrorKind::Io,
            "truncated PGM pixel data: " + path);
    return img;
}

void write_pgm(const Image8& img, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), ErrorKind::Io, "cannot open PGM file for writing: " + path);
    f << "P5\n" << img.w << " " << img.h << "\n255\n";
    f.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    require(f.good(), ErrorKind::Io, "failed writing PGM: " + path);
}

std::vector<Image8> read_lvpc(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), ErrorKind::Io, "cannot open corpus file: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    ByteReader r(bytes.data(), bytes.size(), ErrorKind::Io, "corpus file " + path);
    auto magic = r.bytes(4);
    require(std::memcmp(magic.data(), "LVPC", 4) == 0, ErrorKind::Io,
            "bad corpus magic: " + path);
    const uint32_t count = r.u32();
    const uint32_t h = r.u32();
    const uint32_t w = r.u32();
    require(count >= 1 && h >= 1 && w >= 1 && h <= 65535 && w <= 65535, ErrorKind::Io,
            "implausible corpus header: " + path);
    std::vector<Image8> out;
    out.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        Image8 img;
        img.h = static_cast<int>(h);
        img.w = static_cast<int>(w);
        img.pixels = r.bytes(static_cast<size_t>(h) * w);
        out.push_back(std::move(img));
    }
    return out;
}

void write_lvpc(const std::vector<Image8>& images, const std::string& path) {
    require(!images.empty(), ErrorKind::Config, "corpus must contain at least one image");
    const int h = images[0].h, w = images[0].w;
    for (const auto& img : images)
        require(img.h == h && img.w == w, ErrorKind::Config,
                "raw corpus requires same-size images");
    ByteWriter wr;
    wr.bytes(reinterpret_cast<const uint8_t*>("LVPC"), 4);
    wr.u32(static_cast<uint32_t>(images.size()));
    wr.u32(static_cast<uint32_t>(h));
    wr.u32(static_cast<uint32_t>(w));
    for (const auto& img : images) wr.bytes(img.pixels);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), ErrorKind::Io, "cannot open corpus file for writing: " + path);
    f.write(reinterpret_cast<const char*>(wr.data().data()),
            static_cast<std::streamsize>(wr.size()));
    require(f.good(), ErrorKind::Io, "failed writing corpus: " + path);
}

Corpus load_corpus(const std::string& path) {
    Corpus c;
    if (fs::is_directory(path)) {
        std::vector<std::string> files;
        for (const auto& e : fs::directory_iterator(path)) {
            if (e.is_regular_file() && e.path().extension() == ".pgm")
                files.push_back(e.path().string());
        }
        std::sort(files.begin(), files.end());
        require(!files.empty(), ErrorKind::Io, "no .pgm files in directory: " + path);
        for (const auto& f : files) {
            c.names.push_back(fs::path(f).filename().string());
            c.images.push_back(read_pgm(f));
        }
        return c;
    }
    require(fs::is_regular_file(path), ErrorKind::Io, "corpus path not found: " + path);
    auto imgs = read_lvpc(path);
    for (size_t i = 0; i < imgs.size(); ++i) c.names.push_back("img" + std::to_string(i));
    c.images = std::move(imgs);
    return c;
}

} // namespace lvp
