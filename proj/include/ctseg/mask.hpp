#pragma once

#include <cstdint>
#include <vector>

#include "ctseg/image.hpp"

namespace ctseg {

// Binary raster, row-major, 0 = background / 1 = foreground.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    BinaryMask() = default;
    BinaryMask(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    std::uint8_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    void set(int x, int y, std::uint8_t v) { data[static_cast<size_t>(y) * width + x] = v; }
    bool inside(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

    size_t count() const {
        size_t n = 0;
        for (std::uint8_t v : data) n += (v != 0);
        return n;
    }
};

// Masks travel as 8-bit PGM: 0 = background, 255 = lesion.
inline void save_mask_pgm(const BinaryMask& mask, const std::string& path) {
    GrayImage img(mask.width, mask.height);
    for (size_t i = 0; i < mask.data.size(); ++i)
        img.pixels[i] = mask.data[i] ? 1.0f : 0.0f;
    save_pgm(img, path, 8);
}

inline BinaryMask load_mask_pgm(const std::string& path) {
    const GrayImage img = load_pgm(path);
    BinaryMask mask(img.width, img.height);
    for (size_t i = 0; i < img.pixels.size(); ++i)
        mask.data[i] = img.pixels[i] >= 0.5f ? 1 : 0;
    return mask;
}

} // namespace ctseg
