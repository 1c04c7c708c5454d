#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pestdet/cascade.hpp"
#include "pestdet/image.hpp"

namespace pestdet {

struct PyramidConfig {
    double scale_factor = 1.1;
    uint32_t num_levels = 5;         ///< level 0 is the input itself
    uint32_t max_detection_px = 30;  ///< larger boxes are discarded
};

enum class Accounting {
    IntegralOnly,              ///< 4 B/px: the 32-bit integral plane
    IntegralPlusInput,         ///< 5 B/px: plus the 8-bit tile
    IntegralInputAndSquares,   ///< 13 B/px: plus the 64-bit squared plane
};

uint32_t bytes_per_pixel(Accounting mode);
const char* accounting_name(Accounting mode);
Accounting parse_accounting(const std::string& name);

/// Working-set limit for one tile in the scratchpad.
struct ScratchBudget {
    uint64_t bytes = 99'600;
    Accounting mode = Accounting::IntegralOnly;
};

/// A tile of one pyramid level. `core` is the set of window origins the tile
/// owns: cores partition the level raster, so every window is reported by
/// exactly one tile.
struct TileSpec {
    Rect area;
    Rect core;

    friend bool operator==(const TileSpec&, const TileSpec&) = default;
};

struct Detection {
    Rect bbox;           ///< original-image coordinates
    uint32_t level = 0;  ///< pyramid level that produced the hit
    uint32_t level_x = 0;
    uint32_t level_y = 0;
    double score = 0.0;  ///< final-stage margin

    friend bool operator==(const Detection&, const Detection&) = default;
};

/// Dimensions of level s: floor(W / f^s) x floor(H / f^s).
std::vector<std::pair<uint32_t, uint32_t>> pyramid_dims(uint32_t width, uint32_t height,
                                                        const PyramidConfig& cfg);

/// Level 0 is `img`; level s is `img` resampled to pyramid_dims()[s].
/// Throws ImageTooSmall if any level is smaller than the window.
std::vector<GrayImage> build_pyramid(const GrayImage& img, const PyramidConfig& cfg,
                                     uint32_t window_w = 20, uint32_t window_h = 20);

/// Tiles for a width x height raster. Full-height tiles are preferred; when a
/// window-wide column does not fit the budget, full-width bands are tried,
/// then square tiles. Extents short of the raster are cut to multiples of 4
/// pixels when possible. Adjacent tiles overlap by `overlap` pixels. Throws
/// BudgetTooSmall when no window-sized tile fits.
std::vector<TileSpec> plan_tiles(uint32_t width, uint32_t height, const ScratchBudget& budget,
                                 uint32_t overlap, uint32_t window_w = 20, uint32_t window_h = 20);

/// Hit inside a tile, in tile-local coordinates.
struct TileHit {
    uint32_t x = 0;
    uint32_t y = 0;
    double score = 0.0;

    friend bool operator==(const TileHit&, const TileHit&) = default;
};

/// Scans every window of `tile` whose origin lies on the `step` grid. The
/// grid is anchored at level coordinates, so `tile_x`/`tile_y` (the tile's
/// position in the level) keep tiled and untiled scans aligned.
std::vector<TileHit> scan_tile(const Cascade& c, const GrayImage& tile, uint32_t step = 1,
                               uint32_t tile_x = 0, uint32_t tile_y = 0);

struct DetectOptions {
    PyramidConfig pyramid;
    ScratchBudget budget;
    uint32_t overlap = 20;
    uint32_t step = 1;
    uint32_t workers = 8;
    double group_iou = 0.0;  ///< > 0 enables the optional IoU grouping filter
};

/// Full pipeline: pyramid, tiling, parallel scan, ownership dedup, mapping to
/// original coordinates, size filter. Output sorted by (level, y, x) and
/// independent of `workers`.
std::vector<Detection> detect(const GrayImage& img, const Cascade& c, const DetectOptions& opt);

/// Maps a level-s window origin to original-image coordinates.
Rect map_to_original(uint32_t level_x, uint32_t level_y, uint32_t level, double scale_factor,
                     uint32_t window_w, uint32_t window_h, uint32_t image_w, uint32_t image_h);

/// Greedy score-ordered grouping: drops any detection overlapping an already
/// kept, higher-scoring one at IoU >= threshold.
std::vector<Detection> group_detections(std::vector<Detection> dets, double iou_threshold);

/// Delimited report: header then one `image_id,x,y,w,h,level,score` row per detection.
std::string format_detection_report(const std::string& image_id,
                                    const std::vector<Detection>& dets, bool header = true);

} // namespace pestdet
