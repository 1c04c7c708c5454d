#include "pestdet/integral.hpp"

#include <string>

#include "pestdet/error.hpp"

namespace pestdet {

IntegralImage::IntegralImage(const GrayImage& img, bool with_squares)
    : width_(img.width()), height_(img.height()) {
    if (uint64_t(width_) * height_ > kMaxIntegralPixels)
        fail(ErrorCode::Overflow, "integral image limited to 2^24 pixels, got " +
                                      std::to_string(uint64_t(width_) * height_));
    sums_.resize(img.size());
    if (with_squares)
        squares_.resize(img.size());

    for (uint32_t y = 0; y < height_; ++y) {
        uint32_t row = 0;
        uint64_t row_sq = 0;
        for (uint32_t x = 0; x < width_; ++x) {
            const uint32_t p = img.at(x, y);
            row += p;
            const size_t i = size_t(y) * width_ + x;
            sums_[i] = row + (y > 0 ? sums_[i - width_] : 0u);
            if (with_squares) {
                row_sq += uint64_t(p) * p;
                squares_[i] = row_sq + (y > 0 ? squares_[i - width_] : 0u);
            }
        }
    }
}

IntegralImage build_integral(const GrayImage& img, bool with_squares) {
    return IntegralImage(img, with_squares);
}

uint32_t rect_sum(const IntegralImage& ii, const Rect& r) {
    if (!r.fits(ii.width(), ii.height()))
        fail(ErrorCode::OutOfBounds, "rectangle outside integral image");
    return rect_sum_unchecked(ii, r.x, r.y, r.w, r.h);
}

uint64_t rect_square_sum(const IntegralImage& ii, const Rect& r) {
    if (!ii.has_squares())
        fail(ErrorCode::InvalidArgument, "integral image built without squared plane");
    if (!r.fits(ii.width(), ii.height()))
        fail(ErrorCode::OutOfBounds, "rectangle outside integral image");
    return rect_square_sum_unchecked(ii, r.x, r.y, r.w, r.h);
}

} // namespace pestdet
