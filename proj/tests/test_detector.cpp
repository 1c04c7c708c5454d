#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "pestdet/error.hpp"

using namespace pestdet;

TEST_CASE("pyramid dims") {
    PyramidConfig cfg;
    const auto d = pyramid_dims(320, 240, cfg);
    const std::vector<std::pair<uint32_t, uint32_t>> want = {
        {320, 240}, {290, 218}, {264, 198}, {240, 180}, {218, 163}};
    CHECK(d == want);
    cfg.num_levels = 1;
    const GrayImage img(50, 40, 3);
    const auto one = build_pyramid(img, cfg);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == img);
    CHECK(20 * std::pow(1.1, 4) < 30.0);
    CHECK_THROWS_AS(build_pyramid(GrayImage(19, 40, 0), cfg), Error);
}

TEST_CASE("tile plan at the default budget") {
    const auto tiles = plan_tiles(320, 240, ScratchBudget{}, 20);
    REQUIRE(tiles.size() == 4);
    const uint32_t xs[] = {0, 80, 160, 240};
    for (size_t i = 0; i < 4; ++i) {
        CHECK(tiles[i].area.x == xs[i]);
        CHECK(tiles[i].area.y == 0);
        CHECK(tiles[i].area.h == 240);
        CHECK(tiles[i].area.w == (i < 3 ? 100u : 80u));
    }
    CHECK(uint64_t(tiles[0].area.w) * tiles[0].area.h * 4 == 96000);

    const auto single = plan_tiles(60, 240, ScratchBudget{}, 20);
    REQUIRE(single.size() == 1);
    CHECK(single[0].area == Rect{0, 0, 60, 240});
    CHECK_THROWS_AS(plan_tiles(320, 240, ScratchBudget{1000, Accounting::IntegralOnly}, 20),
                    Error);
}

TEST_CASE("tiles cover the raster and every window") {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 200; ++t) {
        const uint32_t w = 20 + rng() % 120, h = 20 + rng() % 120;
        const auto mode = Accounting(rng() % 3);
        const uint64_t bpp = bytes_per_pixel(mode);
        const ScratchBudget b{bpp * (484 + rng() % 6000), mode};
        const uint32_t overlap = 19 + rng() % 3;
        const auto tiles = plan_tiles(w, h, b, overlap);
        std::vector<int> owner(size_t(w) * h, 0);
        std::vector<bool> covered(size_t(w) * h, false);
        for (const auto& tile : tiles) {
            CHECK(tile.area.area() * bpp <= b.bytes);
            for (uint32_t y = tile.area.y; y < tile.area.bottom(); ++y)
                for (uint32_t x = tile.area.x; x < tile.area.right(); ++x)
                    covered[size_t(y) * w + x] = true;
            for (uint32_t y = tile.core.y; y < tile.core.bottom(); ++y)
                for (uint32_t x = tile.core.x; x < tile.core.right(); ++x)
                    ++owner[size_t(y) * w + x];
        }
        CHECK(std::all_of(covered.begin(), covered.end(), [](bool v) { return v; }));
        CHECK(std::all_of(owner.begin(), owner.end(), [](int v) { return v == 1; }));
        for (uint32_t y = 0; y + 20 <= h; ++y)
            for (uint32_t x = 0; x + 20 <= w; ++x) {
                bool inside = false;
                for (const auto& tile : tiles)
                    inside = inside || (x >= tile.area.x && y >= tile.area.y &&
                                        x + 20 <= tile.area.right() && y + 20 <= tile.area.bottom());
                REQUIRE(inside);
            }
    }
}

TEST_CASE("scan_tile combinatorics") {
    Cascade yes;
    Stage s;
    WeakClassifier wc;
    wc.feature.rects = {{0, 0, 10, 20, 1}, {10, 0, 10, 20, -1}};
    s.weak.push_back(wc);
    s.threshold = -1e9;
    yes.stages.push_back(s);
    CHECK(scan_tile(yes, GrayImage(24, 24, 9)).size() == 25);
    Cascade no = yes;
    no.stages[0].threshold = 1e9;
    CHECK(scan_tile(no, GrayImage(24, 24, 9)).empty());
}

TEST_CASE("tiled detection equals untiled scan") {
    std::mt19937_64 rng(22);
    for (int t = 0; t < 25; ++t) {
        const bool varnorm = t % 2 == 0;
        const Cascade c = testutil::random_cascade(rng, 2 + rng() % 3, varnorm);
        const GrayImage img = testutil::blocky_image(64 + rng() % 60, 64 + rng() % 50, rng);
        DetectOptions opt;
        opt.pyramid.max_detection_px = 1000;
        opt.budget.mode = Accounting(rng() % 3);
        opt.budget.bytes = bytes_per_pixel(opt.budget.mode) * (600 + rng() % 5000);
        opt.workers = 1 + rng() % 4;
        const auto dets = detect(img, c, opt);
        CHECK(oracle::hits_of(dets) == oracle::untiled_scan(img, c, opt.pyramid));
        CHECK(oracle::hits_of(dets).size() == dets.size());
    }
}

TEST_CASE("worker count does not change the output") {
    std::mt19937_64 rng(23);
    const Cascade c = testutil::random_cascade(rng, 3, true);
    const GrayImage img = testutil::blocky_image(320, 240, rng);
    DetectOptions opt;
    opt.workers = 1;
    const auto one = detect(img, c, opt);
    opt.workers = 8;
    CHECK(detect(img, c, opt) == one);
    CHECK_FALSE(one.empty());
    for (const auto& d : one)
        CHECK(std::max(d.bbox.w, d.bbox.h) <= 30);
}

TEST_CASE("coordinate mapping") {
    for (uint32_t s = 0; s < 5; ++s) {
        const double f = std::pow(1.1, s);
        const Rect r = map_to_original(37, 11, s, 1.1, 20, 20, 1000, 1000);
        CHECK(r.x == uint32_t(std::lround(37 * f)));
        CHECK(r.y == uint32_t(std::lround(11 * f)));
        CHECK(r.w == uint32_t(std::lround(20 * f)));
        CHECK(r.h == r.w);
    }
}

TEST_CASE("planted pattern gives one detection") {
    // dark left half, bright right half, on mid grey
    GrayImage img(320, 240, 128);
    for (uint32_t y = 0; y < 20; ++y)
        for (uint32_t x = 0; x < 20; ++x)
            img.at(150 + x, 90 + y) = x < 10 ? 0 : 255;
    Cascade c;
    c.variance_normalization = false;
    Stage s;
    WeakClassifier wc;
    wc.feature.rects = {{0, 0, 10, 20, -1}, {10, 0, 10, 20, 1}};
    wc.threshold = 255 * 200 - 1;
    s.weak.push_back(wc);
    s.threshold = 0.0;
    c.stages.push_back(s);
    const auto dets = detect(img, c, DetectOptions{});
    REQUIRE(dets.size() == 1);
    CHECK(iou(dets[0].bbox, Rect{150, 90, 20, 20}) >= 0.5);
}

TEST_CASE("grouping keeps the best of overlapping hits") {
    std::vector<Detection> d(3);
    d[0].bbox = {0, 0, 20, 20};
    d[0].score = 1.0;
    d[1].bbox = {2, 0, 20, 20};
    d[1].score = 2.0;
    d[2].bbox = {100, 100, 20, 20};
    d[2].score = 0.5;
    const auto g = group_detections(d, 0.5);
    REQUIRE(g.size() == 2);
    CHECK(std::max(g[0].score, g[1].score) == 2.0);
    CHECK(std::min(g[0].score, g[1].score) == 0.5);
}

TEST_CASE("report format") {
    Detection d;
    d.bbox = {1, 2, 20, 20};
    d.level = 0;
    d.score = 0.25;
    const std::string r = format_detection_report("img", {d});
    CHECK(r.rfind("image_id,x,y,w,h,level,score\n", 0) == 0);
    CHECK(r.find("img,1,2,20,20,0,") != std::string::npos);
}
