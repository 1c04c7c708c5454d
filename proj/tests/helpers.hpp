#pragma once

#include <random>

#include "pestdet/cascade.hpp"
#include "pestdet/image.hpp"
#include "pestdet/trainer.hpp"

namespace testutil {

inline pestdet::GrayImage random_image(uint32_t w, uint32_t h, std::mt19937_64& rng) {
    pestdet::GrayImage img(w, h);
    std::uniform_int_distribution<int> d(0, 255);
    for (auto& p : img.pixels())
        p = uint8_t(d(rng));
    return img;
}

// Blocky texture so that features respond with some structure.
inline pestdet::GrayImage blocky_image(uint32_t w, uint32_t h, std::mt19937_64& rng) {
    pestdet::GrayImage img(w, h);
    const uint32_t cell = 3 + rng() % 5;
    std::vector<uint8_t> vals((w / cell + 1) * (h / cell + 1));
    for (auto& v : vals)
        v = uint8_t(rng() % 256);
    std::uniform_int_distribution<int> noise(-12, 12);
    for (uint32_t y = 0; y < h; ++y)
        for (uint32_t x = 0; x < w; ++x) {
            const int v = vals[(y / cell) * (w / cell + 1) + x / cell] + noise(rng);
            img.at(x, y) = uint8_t(std::clamp(v, 0, 255));
        }
    return img;
}

// Small random cascade over 20x20 windows. Thresholds are spread so that a
// fair share of windows survives each stage.
inline pestdet::Cascade random_cascade(std::mt19937_64& rng, uint32_t stages, bool varnorm) {
    static const auto features = pestdet::enumerate_features(20, 20, 2, 2);
    pestdet::Cascade c;
    c.variance_normalization = varnorm;
    std::normal_distribution<double> thr(0.0, varnorm ? 300.0 : 1500.0);
    for (uint32_t s = 0; s < stages; ++s) {
        pestdet::Stage st;
        const uint32_t n = 1 + rng() % 4;
        double lo = 0;
        for (uint32_t k = 0; k < n; ++k) {
            pestdet::WeakClassifier wc;
            wc.feature = features[rng() % features.size()];
            wc.threshold = int64_t(std::lround(thr(rng)));
            wc.polarity = rng() % 2 ? 1 : -1;
            wc.vote_pass = 0.5 + (rng() % 100) / 100.0;
            wc.vote_fail = -0.5 - (rng() % 100) / 100.0;
            lo += wc.vote_fail;
            st.weak.push_back(wc);
        }
        st.threshold = lo * 0.3;
        c.stages.push_back(st);
    }
    return c;
}

} // namespace testutil
