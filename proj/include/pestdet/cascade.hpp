#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pestdet/integral.hpp"

namespace pestdet {

/// One weighted rectangle of a Haar-like template, in base-window coordinates.
struct HaarRect {
    uint32_t x = 0;
    uint32_t y = 0;
    uint32_t w = 1;
    uint32_t h = 1;
    int32_t weight = 1;

    friend bool operator==(const HaarRect&, const HaarRect&) = default;
};

/// Signed sum of 2-4 rectangle sums. Templates are zero-mean: the weighted
/// areas cancel, so a flat window always evaluates to 0.
struct HaarFeature {
    std::vector<HaarRect> rects;

    int64_t weighted_area() const;
    bool fits(uint32_t window_w, uint32_t window_h) const;

    friend bool operator==(const HaarFeature&, const HaarFeature&) = default;
};

/// Decision stump on one feature. The stump passes when
/// polarity * (value - threshold * norm) > 0.
struct WeakClassifier {
    HaarFeature feature;
    int64_t threshold = 0;
    int polarity = 1;
    double vote_pass = 1.0;
    double vote_fail = -1.0;

    friend bool operator==(const WeakClassifier&, const WeakClassifier&) = default;
};

struct Stage {
    std::vector<WeakClassifier> weak;
    double threshold = 0.0;  ///< window rejected when stage score < threshold

    friend bool operator==(const Stage&, const Stage&) = default;
};

struct Cascade {
    uint32_t window_w = 20;
    uint32_t window_h = 20;
    bool variance_normalization = true;
    std::vector<Stage> stages;

    size_t num_weak() const;

    /// Parameter footprint of the packed on-device layout:
    ///   8 B header (window w/h, stage count, flags as u16)
    ///   per stage: f32 threshold + u16 weak count          =  6 B
    ///   per weak:  i32 threshold + 2 x f32 votes + u8 packed
    ///              polarity/rect count                      = 13 B
    ///   per rect:  u8 x, y, w, h + i8 weight                =  5 B
    size_t size_bytes() const;

    /// Throws on structural violations (see load_cascade for the codes).
    void validate() const;

    friend bool operator==(const Cascade&, const Cascade&) = default;
};

// In variance-normalised mode thresholds are fixed point: the stump's norm is
// the window standard deviation divided by this factor, i.e. a threshold of
// 256 means "one standard deviation" of feature response.
inline constexpr double kNormThresholdScale = 256.0;

/// Normalisation factor applied to stump thresholds for the window at
/// `origin`: 1 when normalisation is off, else std-dev / kNormThresholdScale.
double window_norm(const Cascade& c, const IntegralImage& ii, uint32_t x, uint32_t y);

/// Feature response at `origin`, with rectangle coordinates scaled by `scale`
/// (rounded to nearest). Throws OutOfBounds if a scaled rectangle leaves the
/// raster.
int64_t feature_value(const HaarFeature& f, const IntegralImage& ii, uint32_t x, uint32_t y,
                      double scale = 1.0);

/// Unchecked scale-1 response for the scan loop.
inline int64_t feature_value_unchecked(const HaarFeature& f, const IntegralImage& ii, uint32_t x,
                                       uint32_t y) {
    int64_t v = 0;
    for (const auto& r : f.rects)
        v += int64_t(r.weight) * rect_sum_unchecked(ii, x + r.x, y + r.y, r.w, r.h);
    return v;
}

inline bool stump_passes(const WeakClassifier& wc, int64_t value, double norm) {
    return wc.polarity * (double(value) - double(wc.threshold) * norm) > 0.0;
}

struct WindowResult {
    bool accepted = false;
    int rejected_stage = -1;  ///< index of the rejecting stage, -1 when accepted
    double margin = 0.0;      ///< score - threshold of the last evaluated stage
};

/// Runs the cascade on the window whose top-left corner is (x, y).
WindowResult eval_window(const Cascade& c, const IntegralImage& ii, uint32_t x, uint32_t y);

/// Same as eval_window without bounds checks.
WindowResult eval_window_unchecked(const Cascade& c, const IntegralImage& ii, uint32_t x,
                                   uint32_t y);

/// Score of a single stage (sum of weak votes) at (x, y).
double stage_score(const Stage& s, const IntegralImage& ii, uint32_t x, uint32_t y, double norm);

// Cascade file: versioned JSON, field names documented in docs/file-formats.md.
std::string cascade_to_json(const Cascade& c);
Cascade cascade_from_json(const std::string& text);
void save_cascade(const Cascade& c, const std::filesystem::path& path);
Cascade load_cascade(const std::filesystem::path& path);

} // namespace pestdet
