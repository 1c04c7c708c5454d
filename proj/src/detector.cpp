#include "pestdet/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "pestdet/error.hpp"
#include "pestdet/evaluator.hpp"

namespace pestdet {

uint32_t bytes_per_pixel(Accounting mode) {
    switch (mode) {
    case Accounting::IntegralOnly: return 4;
    case Accounting::IntegralPlusInput: return 5;
    case Accounting::IntegralInputAndSquares: return 13;
    }
    return 4;
}

const char* accounting_name(Accounting mode) {
    switch (mode) {
    case Accounting::IntegralOnly: return "ii_only";
    case Accounting::IntegralPlusInput: return "ii_plus_input";
    case Accounting::IntegralInputAndSquares: return "ii_plus_input_plus_squares";
    }
    return "ii_only";
}

Accounting parse_accounting(const std::string& name) {
    if (name == "ii_only")
        return Accounting::IntegralOnly;
    if (name == "ii_plus_input")
        return Accounting::IntegralPlusInput;
    if (name == "ii_plus_input_plus_squares")
        return Accounting::IntegralInputAndSquares;
    fail(ErrorCode::InvalidArgument, "unknown accounting mode '" + name + "'");
}

std::vector<std::pair<uint32_t, uint32_t>> pyramid_dims(uint32_t width, uint32_t height,
                                                        const PyramidConfig& cfg) {
    if (!(cfg.scale_factor > 1.0))
        fail(ErrorCode::InvalidArgument, "pyramid scale factor must be > 1");
    if (cfg.num_levels == 0)
        fail(ErrorCode::InvalidArgument, "pyramid needs at least one level");
    std::vector<std::pair<uint32_t, uint32_t>> dims;
    for (uint32_t s = 0; s < cfg.num_levels; ++s) {
        const double f = std::pow(cfg.scale_factor, double(s));
        // The epsilon keeps exact quotients (e.g. 121 / 1.1^2) from flooring down.
        dims.emplace_back(uint32_t(std::floor(width / f + 1e-9)),
                          uint32_t(std::floor(height / f + 1e-9)));
    }
    return dims;
}

std::vector<GrayImage> build_pyramid(const GrayImage& img, const PyramidConfig& cfg,
                                     uint32_t window_w, uint32_t window_h) {
    const auto dims = pyramid_dims(img.width(), img.height(), cfg);
    std::vector<GrayImage> levels;
    levels.reserve(dims.size());
    for (size_t s = 0; s < dims.size(); ++s) {
        const auto [w, h] = dims[s];
        if (w < window_w || h < window_h)
            fail(ErrorCode::ImageTooSmall,
                 "pyramid level " + std::to_string(s) + " (" + std::to_string(w) + "x" +
                     std::to_string(h) + ") is smaller than the " + std::to_string(window_w) +
                     "x" + std::to_string(window_h) + " window");
        levels.push_back(s == 0 ? img : downscale(img, w, h));
    }
    return levels;
}

namespace {

struct Span1D {
    uint32_t origin;
    uint32_t length;
    uint32_t core_begin;
    uint32_t core_end;
};

// Splits [0, length) into tiles of `tile` pixels advancing by tile - overlap.
// The last tile is truncated at the border. Tile i owns origins
// [origin_i, origin_{i+1}); the last tile owns up to the border.
std::vector<Span1D> split_axis(uint32_t length, uint32_t tile, uint32_t overlap) {
    std::vector<Span1D> spans;
    if (tile >= length) {
        spans.push_back({0, length, 0, length});
        return spans;
    }
    uint32_t origin = 0;
    for (;;) {
        const uint32_t len = std::min(tile, length - origin);
        spans.push_back({origin, len, origin, length});
        if (origin + len >= length)
            break;
        origin += tile - overlap;
    }
    for (size_t i = 0; i + 1 < spans.size(); ++i)
        spans[i].core_end = spans[i + 1].origin;
    return spans;
}

bool axis_ok(uint32_t tile, uint32_t length, uint32_t window, uint32_t overlap) {
    return tile >= window && (tile >= length || tile > overlap);
}

// Partial extents are cut to whole 4-pixel words when that still leaves a
// usable tile.
uint32_t word_aligned(uint32_t tile, uint32_t length, uint32_t window, uint32_t overlap) {
    if (tile >= length)
        return tile;
    const uint32_t a = tile & ~3u;
    return axis_ok(a, length, window, overlap) ? a : tile;
}

} // namespace

std::vector<TileSpec> plan_tiles(uint32_t width, uint32_t height, const ScratchBudget& budget,
                                 uint32_t overlap, uint32_t window_w, uint32_t window_h) {
    if (width < window_w || height < window_h)
        fail(ErrorCode::ImageTooSmall, "raster smaller than the detection window");
    const uint64_t bpp = bytes_per_pixel(budget.mode);
    const uint64_t max_px = budget.bytes / bpp;
    if (budget.bytes <= 4ull * window_w * window_h || max_px < uint64_t(window_w) * window_h)
        fail(ErrorCode::BudgetTooSmall, "scratch budget of " + std::to_string(budget.bytes) +
                                            " B cannot hold a single window");

    uint32_t tw = 0, th = 0;
    if (const uint64_t w = std::min<uint64_t>(width, max_px / height);
        axis_ok(uint32_t(w), width, window_w, overlap)) {
        tw = word_aligned(uint32_t(w), width, window_w, overlap);
        th = height;
    } else if (const uint64_t h = std::min<uint64_t>(height, max_px / width);
               axis_ok(uint32_t(h), height, window_h, overlap)) {
        tw = width;
        th = word_aligned(uint32_t(h), height, window_h, overlap);
    } else {
        const auto side = uint64_t(std::floor(std::sqrt(double(max_px))));
        const auto sw = uint32_t(std::min<uint64_t>(width, side));
        const auto sh = uint32_t(std::min<uint64_t>(height, side));
        if (!axis_ok(sw, width, window_w, overlap) || !axis_ok(sh, height, window_h, overlap))
            fail(ErrorCode::BudgetTooSmall,
                 "scratch budget of " + std::to_string(budget.bytes) +
                     " B leaves no tile larger than the " + std::to_string(overlap) +
                     " px overlap");
        tw = word_aligned(sw, width, window_w, overlap);
        th = word_aligned(sh, height, window_h, overlap);
    }

    const auto xs = split_axis(width, tw, overlap);
    const auto ys = split_axis(height, th, overlap);
    std::vector<TileSpec> tiles;
    tiles.reserve(xs.size() * ys.size());
    for (const auto& ya : ys)
        for (const auto& xa : xs)
            tiles.push_back({Rect{xa.origin, ya.origin, xa.length, ya.length},
                             Rect{xa.core_begin, ya.core_begin, xa.core_end - xa.core_begin,
                                  ya.core_end - ya.core_begin}});
    return tiles;
}

std::vector<TileHit> scan_tile(const Cascade& c, const GrayImage& tile, uint32_t step,
                               uint32_t tile_x, uint32_t tile_y) {
    if (step == 0)
        fail(ErrorCode::InvalidArgument, "scan step must be >= 1");
    std::vector<TileHit> hits;
    if (tile.width() < c.window_w || tile.height() < c.window_h)
        return hits;
    const IntegralImage ii = build_integral(tile, c.variance_normalization);
    const uint32_t x0 = (step - tile_x % step) % step;
    const uint32_t y0 = (step - tile_y % step) % step;
    for (uint32_t y = y0; y + c.window_h <= tile.height(); y += step) {
        for (uint32_t x = x0; x + c.window_w <= tile.width(); x += step) {
            const WindowResult r = eval_window_unchecked(c, ii, x, y);
            if (r.accepted)
                hits.push_back({x, y, r.margin});
        }
    }
    return hits;
}

Rect map_to_original(uint32_t level_x, uint32_t level_y, uint32_t level, double scale_factor,
                     uint32_t window_w, uint32_t window_h, uint32_t image_w, uint32_t image_h) {
    const double f = std::pow(scale_factor, double(level));
    Rect r;
    r.x = std::min<uint32_t>(uint32_t(std::lround(level_x * f)), image_w - 1);
    r.y = std::min<uint32_t>(uint32_t(std::lround(level_y * f)), image_h - 1);
    r.w = std::min<uint32_t>(uint32_t(std::lround(window_w * f)), image_w - r.x);
    r.h = std::min<uint32_t>(uint32_t(std::lround(window_h * f)), image_h - r.y);
    return r;
}

namespace {

struct WorkItem {
    uint32_t level;
    TileSpec tile;
};

// Hands out tile indices to the worker pool; the calling thread plays the
// dispatcher and joins the workers.
class TileDispatcher {
public:
    explicit TileDispatcher(size_t count) : count_(count) {}

    bool next(size_t& index) {
        std::lock_guard lock(mu_);
        if (next_ >= count_ || error_)
            return false;
        index = next_++;
        return true;
    }

    void record_error(std::exception_ptr e) {
        std::lock_guard lock(mu_);
        if (!error_)
            error_ = e;
    }

    std::exception_ptr error() const { return error_; }

private:
    std::mutex mu_;
    size_t count_;
    size_t next_ = 0;
    std::exception_ptr error_;
};

} // namespace

std::vector<Detection> detect(const GrayImage& img, const Cascade& c, const DetectOptions& opt) {
    c.validate();
    if (opt.step == 0)
        fail(ErrorCode::InvalidArgument, "scan step must be >= 1");
    const auto levels = build_pyramid(img, opt.pyramid, c.window_w, c.window_h);

    std::vector<WorkItem> items;
    for (uint32_t s = 0; s < levels.size(); ++s)
        for (const auto& t : plan_tiles(levels[s].width(), levels[s].height(), opt.budget,
                                        opt.overlap, c.window_w, c.window_h))
            items.push_back({s, t});

    std::vector<std::vector<TileHit>> results(items.size());
    TileDispatcher dispatcher(items.size());
    auto worker = [&] {
        size_t i = 0;
        while (dispatcher.next(i)) {
            try {
                const auto& it = items[i];
                const GrayImage tile = levels[it.level].crop(it.tile.area);
                results[i] = scan_tile(c, tile, opt.step, it.tile.area.x, it.tile.area.y);
            } catch (...) {
                dispatcher.record_error(std::current_exception());
            }
        }
    };
    const uint32_t n_workers = std::max<uint32_t>(1, opt.workers);
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (uint32_t w = 0; w < n_workers; ++w)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    if (dispatcher.error())
        std::rethrow_exception(dispatcher.error());

    std::vector<Detection> dets;
    for (size_t i = 0; i < items.size(); ++i) {
        const auto& it = items[i];
        const Rect& core = it.tile.core;
        for (const auto& h : results[i]) {
            const uint32_t lx = it.tile.area.x + h.x;
            const uint32_t ly = it.tile.area.y + h.y;
            if (lx < core.x || lx >= core.right() || ly < core.y || ly >= core.bottom())
                continue;
            const double f = std::pow(opt.pyramid.scale_factor, double(it.level));
            const auto side_w = uint32_t(std::lround(c.window_w * f));
            const auto side_h = uint32_t(std::lround(c.window_h * f));
            if (std::max(side_w, side_h) > opt.pyramid.max_detection_px)
                continue;
            Detection d;
            d.bbox = map_to_original(lx, ly, it.level, opt.pyramid.scale_factor, c.window_w,
                                     c.window_h, img.width(), img.height());
            d.level = it.level;
            d.level_x = lx;
            d.level_y = ly;
            d.score = h.score;
            dets.push_back(d);
        }
    }
    std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
        if (a.level != b.level)
            return a.level < b.level;
        if (a.level_y != b.level_y)
            return a.level_y < b.level_y;
        return a.level_x < b.level_x;
    });
    if (opt.group_iou > 0.0)
        dets = group_detections(std::move(dets), opt.group_iou);
    return dets;
}

std::vector<Detection> group_detections(std::vector<Detection> dets, double iou_threshold) {
    std::vector<size_t> order(dets.size());
    for (size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return dets[a].score > dets[b].score; });
    std::vector<bool> keep(dets.size(), false);
    std::vector<size_t> kept;
    for (size_t i : order) {
        bool suppressed = false;
        for (size_t k : kept)
            if (iou(dets[i].bbox, dets[k].bbox) >= iou_threshold) {
                suppressed = true;
                break;
            }
        if (!suppressed) {
            kept.push_back(i);
            keep[i] = true;
        }
    }
    std::vector<Detection> out;
    for (size_t i = 0; i < dets.size(); ++i)
        if (keep[i])
            out.push_back(dets[i]);
    return out;
}

std::string format_detection_report(const std::string& image_id,
                                    const std::vector<Detection>& dets, bool header) {
    std::string out;
    if (header)
        out += "image_id,x,y,w,h,level,score\n";
    char buf[160];
    for (const auto& d : dets) {
        std::snprintf(buf, sizeof buf, ",%u,%u,%u,%u,%u,%.6f\n", d.bbox.x, d.bbox.y, d.bbox.w,
                      d.bbox.h, d.level, d.score);
        out += image_id;
        out += buf;
    }
    return out;
}

} // namespace pestdet
