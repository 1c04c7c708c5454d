#pragma once

#include <cstdint>

namespace pestdet {

// Axis-aligned pixel rectangle: top-left corner plus extent.
struct Rect {
    uint32_t x = 0;
    uint32_t y = 0;
    uint32_t w = 0;
    uint32_t h = 0;

    uint64_t area() const { return uint64_t(w) * h; }
    uint32_t right() const { return x + w; }
    uint32_t bottom() const { return y + h; }

    bool fits(uint32_t width, uint32_t height) const {
        return w >= 1 && h >= 1 && uint64_t(x) + w <= width && uint64_t(y) + h <= height;
    }

    friend bool operator==(const Rect&, const Rect&) = default;
};

} // namespace pestdet
