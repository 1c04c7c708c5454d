#pragma once

#include <cstdint>
#include <vector>

#include "pestdet/image.hpp"
#include "pestdet/rect.hpp"

namespace pestdet {

// Largest raster (in pixels) whose 8-bit sum still fits a 32-bit accumulator.
inline constexpr uint64_t kMaxIntegralPixels = uint64_t(1) << 24;

/// Inclusive-corner integral image: sums[y][x] is the sum of all pixels in
/// (0,0)-(x,y). No zero row/column is stored, so a W x H image needs exactly
/// 4*W*H bytes for the main plane.
class IntegralImage {
public:
    IntegralImage(const GrayImage& img, bool with_squares);

    uint32_t width() const { return width_; }
    uint32_t height() const { return height_; }
    bool has_squares() const { return !squares_.empty(); }

    uint32_t at(uint32_t x, uint32_t y) const { return sums_[size_t(y) * width_ + x]; }
    uint64_t square_at(uint32_t x, uint32_t y) const { return squares_[size_t(y) * width_ + x]; }

    const std::vector<uint32_t>& sums() const { return sums_; }
    const std::vector<uint64_t>& squares() const { return squares_; }

private:
    uint32_t width_;
    uint32_t height_;
    std::vector<uint32_t> sums_;
    std::vector<uint64_t> squares_;
};

/// Throws Overflow when the image exceeds kMaxIntegralPixels.
IntegralImage build_integral(const GrayImage& img, bool with_squares);

/// Sum of pixels inside `r` from four corner reads. Throws OutOfBounds.
uint32_t rect_sum(const IntegralImage& ii, const Rect& r);

/// Sum of squared pixels inside `r`; requires the squared plane.
uint64_t rect_square_sum(const IntegralImage& ii, const Rect& r);

// Unchecked variants for the detector hot path; caller guarantees bounds.
inline uint32_t rect_sum_unchecked(const IntegralImage& ii, uint32_t x, uint32_t y, uint32_t w,
                                   uint32_t h) {
    const uint32_t x1 = x + w - 1;
    const uint32_t y1 = y + h - 1;
    uint32_t s = ii.at(x1, y1);
    if (x > 0)
        s -= ii.at(x - 1, y1);
    if (y > 0)
        s -= ii.at(x1, y - 1);
    if (x > 0 && y > 0)
        s += ii.at(x - 1, y - 1);
    return s;
}

inline uint64_t rect_square_sum_unchecked(const IntegralImage& ii, uint32_t x, uint32_t y,
                                          uint32_t w, uint32_t h) {
    const uint32_t x1 = x + w - 1;
    const uint32_t y1 = y + h - 1;
    uint64_t s = ii.square_at(x1, y1);
    if (x > 0)
        s -= ii.square_at(x - 1, y1);
    if (y > 0)
        s -= ii.square_at(x1, y - 1);
    if (x > 0 && y > 0)
        s += ii.square_at(x - 1, y - 1);
    return s;
}

} // namespace pestdet
