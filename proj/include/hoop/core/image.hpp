#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hoop/core/error.hpp"

namespace hoop {

/// Row-major 8-bit grayscale image.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0) : width(w), height(h), pixels(size_t(w) * h, fill) {}

    std::uint8_t& at(int x, int y) { return pixels[size_t(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return pixels[size_t(y) * width + x]; }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

    size_t count_nonzero() const {
        size_t n = 0;
        for (auto p : pixels) n += p != 0;
        return n;
    }
    bool operator==(const GrayImage&) const = default;
};

inline void write_pgm(const std::string& path, const GrayImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

inline GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    auto token = [&]() {
        std::string t;
        while (in >> t) {
            if (t[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return t;
        }
        throw IoError("truncated PGM header in " + path);
    };
    if (token() != "P5") throw IoError(path + " is not a binary PGM (P5)");
    GrayImage img;
    img.width = std::stoi(token());
    img.height = std::stoi(token());
    const int maxval = std::stoi(token());
    if (img.width <= 0 || img.height <= 0 || maxval <= 0 || maxval > 255)
        throw IoError("unsupported PGM geometry in " + path);
    in.get();  // single whitespace after maxval
    img.pixels.resize(size_t(img.width) * img.height);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) throw IoError("truncated PGM data in " + path);
    return img;
}

}  // namespace hoop
