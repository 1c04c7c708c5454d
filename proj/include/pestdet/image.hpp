#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pestdet/rect.hpp"

namespace pestdet {

/// 8-bit grayscale raster, row-major. Width and height are always >= 1.
class GrayImage {
public:
    GrayImage(uint32_t width, uint32_t height, uint8_t fill = 0);
    GrayImage(uint32_t width, uint32_t height, std::vector<uint8_t> pixels);

    uint32_t width() const { return width_; }
    uint32_t height() const { return height_; }
    size_t size() const { return pixels_.size(); }

    uint8_t at(uint32_t x, uint32_t y) const { return pixels_[size_t(y) * width_ + x]; }
    uint8_t& at(uint32_t x, uint32_t y) { return pixels_[size_t(y) * width_ + x]; }

    std::span<const uint8_t> pixels() const { return pixels_; }
    std::span<uint8_t> pixels() { return pixels_; }

    /// Copy of the sub-raster `r`; throws OutOfBounds if `r` leaves the image.
    GrayImage crop(const Rect& r) const;

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    uint32_t width_;
    uint32_t height_;
    std::vector<uint8_t> pixels_;
};

// Binary PGM ("P5", maxval 255) codec. Header comments are accepted on read.
GrayImage load_pgm(std::span<const uint8_t> content);
std::vector<uint8_t> save_pgm(const GrayImage& img);
GrayImage read_pgm_file(const std::filesystem::path& path);
void write_pgm_file(const GrayImage& img, const std::filesystem::path& path);

/// Adds i.i.d. N(0, sigma^2) noise to every pixel, rounds and clamps to
/// [0,255]. Pure function of (img, sigma, seed).
GrayImage sensor_degrade(const GrayImage& img, double sigma, uint64_t seed);

/// Bilinear resampling with half-pixel-centred sampling and nearest-integer
/// rounding. Only shrinking (or identity) is allowed.
GrayImage downscale(const GrayImage& img, uint32_t new_width, uint32_t new_height);

} // namespace pestdet
