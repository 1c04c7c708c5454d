#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "pestdet/image.hpp"

namespace pestdet {

// Synthetic trap imagery: smooth gradient backgrounds with texture noise and
// clutter (dots, thin lines, bright blobs), and dark elongated blobs standing
// in for moths.

struct SynthConfig {
    double noise_sigma = 5.0;
    double moth_length_min = 15.0;  ///< major axis, pixels
    double moth_length_max = 18.0;
    uint32_t clutter_per_10k_px = 25;
};

GrayImage synth_background(uint32_t width, uint32_t height, std::mt19937_64& rng,
                           const SynthConfig& cfg = {});

/// Draws one moth centred at (cx, cy). Returns its 20x20-style bounding box
/// (side = `box_side`, centred, clipped to the image).
Rect draw_moth(GrayImage& img, double cx, double cy, std::mt19937_64& rng,
               const SynthConfig& cfg = {}, uint32_t box_side = 20);

/// A side x side patch with one centred moth (up to 1 px jitter).
GrayImage synth_positive(std::mt19937_64& rng, const SynthConfig& cfg = {}, uint32_t side = 20);

struct SynthScene {
    GrayImage image;
    std::vector<Rect> targets;
};

/// Background with `count` non-overlapping moths.
SynthScene synth_scene(uint32_t width, uint32_t height, uint32_t count, std::mt19937_64& rng,
                       const SynthConfig& cfg = {});

struct SynthCorpus {
    std::vector<GrayImage> train_positives;
    std::vector<GrayImage> test_positives;
    std::vector<GrayImage> train_negatives;  ///< full images, no moths
    std::vector<GrayImage> test_negatives;
};

SynthCorpus synth_corpus(uint32_t n_train_pos, uint32_t n_test_pos, uint32_t n_train_neg,
                         uint32_t n_test_neg, uint32_t neg_w, uint32_t neg_h, uint64_t seed,
                         const SynthConfig& cfg = {});

} // namespace pestdet
