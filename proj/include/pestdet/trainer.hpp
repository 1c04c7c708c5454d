#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pestdet/cascade.hpp"
#include "pestdet/detector.hpp"
#include "pestdet/image.hpp"

namespace pestdet {

enum HaarTemplate : uint32_t {
    kTwoHorizontal = 1u << 0,
    kTwoVertical = 1u << 1,
    kThreeHorizontal = 1u << 2,
    kThreeVertical = 1u << 3,
    kFourChecker = 1u << 4,
    kAllTemplates = 0x1f,
};

/// All placements of the selected templates inside a win_w x win_h window.
/// Cell sizes start at `min_size` and grow by one pixel; positions advance by
/// `stride`. Order: template, cell height, cell width, y, x.
std::vector<HaarFeature> enumerate_features(uint32_t win_w, uint32_t win_h, uint32_t min_size = 1,
                                            uint32_t stride = 1,
                                            uint32_t templates = kAllTemplates);

struct TrainSample {
    GrayImage window;
    bool positive = false;
    double weight = 1.0;
};

struct WeakResult {
    WeakClassifier wc;
    double error = 0.5;
    bool degenerate = false;  ///< no stump beats chance
    size_t feature_index = 0;
};

/// Best stump over `features` by weighted error. Ties resolve on (feature
/// index, polarity +1 before -1, smallest threshold). Within a polarity the
/// threshold is the smallest integer reaching the optimum, searched from one
/// below the lowest floor key. Votes are +-ln(1/beta) of the error.
/// Weights are used as given (not renormalised).
WeakResult train_weak(const std::vector<HaarFeature>& features,
                      const std::vector<TrainSample>& samples, bool variance_normalization,
                      uint32_t threads = 0);

struct TrainConfig {
    uint32_t num_stages = 15;
    double min_detection_rate = 0.995;   ///< per stage, on training positives
    double max_false_positive_rate = 0.5;  ///< per stage, on training negatives
    uint32_t max_weak_per_stage = 200;
    double feature_fraction = 1.0;       ///< random subset per stage
    uint32_t feature_min_size = 1;
    uint32_t feature_stride = 1;
    uint32_t negatives_per_stage = 1000;
    uint32_t min_negatives = 20;
    uint32_t mining_step = 1;
    PyramidConfig pool_pyramid;
    bool variance_normalization = true;
    uint32_t window_w = 20;
    uint32_t window_h = 20;
    uint64_t seed = 1;
    uint32_t threads = 0;  ///< 0: hardware concurrency
};

struct StageResult {
    Stage stage;
    double train_detection_rate = 0.0;
    double train_false_positive_rate = 1.0;
    bool target_met = false;
};

/// Discrete AdaBoost on one sample set. Initial weights are 1/(2m) for the m
/// positives and 1/(2l) for the l negatives; sample weights in `samples` are
/// ignored.
StageResult train_stage(const std::vector<HaarFeature>& features,
                        const std::vector<TrainSample>& samples, const TrainConfig& cfg);

struct StageLog {
    uint32_t stage = 0;
    uint32_t num_weak = 0;
    double threshold = 0.0;
    double train_detection_rate = 0.0;
    double train_false_positive_rate = 0.0;
    uint64_t positives = 0;
    uint64_t negatives = 0;
    double pool_fp_rate = 0.0;  ///< window-level FP of the cascade after this stage
    bool target_met = false;
};

struct TrainResult {
    Cascade cascade;
    std::vector<StageLog> log;
    uint64_t pool_windows = 0;
    bool stopped_early = false;
    std::string stop_reason;
};

/// Window counts for a set of images scanned at every pyramid level.
struct PoolStats {
    uint64_t windows = 0;
    uint64_t accepted = 0;
    double rate() const { return windows ? double(accepted) / double(windows) : 0.0; }
};

/// Counts how many windows of `pool` (all pyramid levels, origins on the
/// `step` grid) the cascade accepts. An empty cascade accepts everything.
PoolStats scan_pool(const Cascade& c, const std::vector<GrayImage>& pool, const PyramidConfig& pyr,
                    uint32_t step = 1, uint32_t threads = 0);

/// Attentional cascade: every stage trains on all positives plus negatives
/// mined from `neg_pool` windows that pass all previous stages. Positives must
/// be window-sized.
TrainResult train_cascade(const std::vector<GrayImage>& positives,
                          const std::vector<GrayImage>& neg_pool, const TrainConfig& cfg);

std::string format_training_log(const TrainResult& r);

} // namespace pestdet
