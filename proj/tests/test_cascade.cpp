#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "pestdet/error.hpp"
#include "pestdet/integral.hpp"

using namespace pestdet;
using testutil::blocky_image;
using testutil::random_cascade;

namespace {

int64_t naive_feature(const HaarFeature& f, const GrayImage& img, uint32_t ox, uint32_t oy) {
    int64_t v = 0;
    for (const auto& r : f.rects)
        for (uint32_t y = r.y; y < r.y + r.h; ++y)
            for (uint32_t x = r.x; x < r.x + r.w; ++x)
                v += int64_t(r.weight) * img.at(ox + x, oy + y);
    return v;
}

bool naive_accept(const Cascade& c, const GrayImage& img, uint32_t ox, uint32_t oy) {
    double norm = 1.0;
    if (c.variance_normalization) {
        double mean = 0;
        for (uint32_t y = 0; y < c.window_h; ++y)
            for (uint32_t x = 0; x < c.window_w; ++x)
                mean += img.at(ox + x, oy + y);
        mean /= c.window_w * c.window_h;
        double var = 0;
        for (uint32_t y = 0; y < c.window_h; ++y)
            for (uint32_t x = 0; x < c.window_w; ++x)
                var += (img.at(ox + x, oy + y) - mean) * (img.at(ox + x, oy + y) - mean);
        norm = std::sqrt(var / (c.window_w * c.window_h)) / 256.0;
    }
    for (const auto& st : c.stages) {
        double score = 0;
        for (const auto& wc : st.weak) {
            const double v = double(naive_feature(wc.feature, img, ox, oy));
            score += wc.polarity * (v - wc.threshold * norm) > 0 ? wc.vote_pass : wc.vote_fail;
        }
        if (score < st.threshold)
            return false;
    }
    return true;
}

HaarFeature two_rect() {
    HaarFeature f;
    f.rects = {{0, 0, 10, 20, 1}, {10, 0, 10, 20, -1}};
    return f;
}

} // namespace

TEST_CASE("vacuous stage accepts everything") {
    Cascade c;
    Stage s;
    WeakClassifier wc;
    wc.feature = two_rect();
    s.weak.push_back(wc);
    s.threshold = -INFINITY;
    c.stages.push_back(s);
    std::mt19937_64 rng(1);
    const GrayImage img = blocky_image(40, 30, rng);
    const IntegralImage ii(img, true);
    for (uint32_t y = 0; y + 20 <= 30; ++y)
        for (uint32_t x = 0; x + 20 <= 40; ++x)
            CHECK(eval_window(c, ii, x, y).accepted);
    CHECK_THROWS_AS(eval_window(c, ii, 21, 0), Error);
}

TEST_CASE("hand evaluated two-rect feature") {
    GrayImage img(20, 20, 0);
    for (uint32_t y = 0; y < 20; ++y)
        for (uint32_t x = 0; x < 10; ++x)
            img.at(x, y) = 255;
    const IntegralImage ii(img, false);
    CHECK(feature_value(two_rect(), ii, 0, 0) == 255 * 200);

    Cascade c;
    c.variance_normalization = false;
    Stage s;
    WeakClassifier wc;
    wc.feature = two_rect();
    wc.threshold = 50000;
    s.weak.push_back(wc);
    s.threshold = 0.0;
    c.stages.push_back(s);
    CHECK(eval_window(c, ii, 0, 0).accepted);  // 51000 > 50000
    c.stages[0].weak[0].polarity = -1;
    const WindowResult r = eval_window(c, ii, 0, 0);
    CHECK_FALSE(r.accepted);
    CHECK(r.rejected_stage == 0);
}

TEST_CASE("feature_value vs pixel loop") {
    std::mt19937_64 rng(2);
    const auto feats = enumerate_features(20, 20, 1, 1);
    for (int t = 0; t < 300; ++t) {
        const GrayImage img = testutil::random_image(30, 26, rng);
        const IntegralImage ii(img, false);
        const HaarFeature& f = feats[rng() % feats.size()];
        const uint32_t x = rng() % 11, y = rng() % 7;
        CHECK(feature_value(f, ii, x, y) == naive_feature(f, img, x, y));
        CHECK(feature_value(f, ii, x, y, 1.0) == feature_value_unchecked(f, ii, x, y));
    }
    const IntegralImage zero(GrayImage(20, 20, 0), false);
    for (size_t i = 0; i < feats.size(); i += 97)
        CHECK(feature_value(feats[i], zero, 0, 0) == 0);
}

TEST_CASE("feature value is linear in intensity") {
    std::mt19937_64 rng(4);
    const auto feats = enumerate_features(20, 20, 2, 2);
    for (int t = 0; t < 50; ++t) {
        GrayImage img(20, 20);
        for (auto& p : img.pixels())
            p = uint8_t(rng() % 64);
        GrayImage img3 = img;
        for (auto& p : img3.pixels())
            p = uint8_t(p * 3);
        const HaarFeature& f = feats[rng() % feats.size()];
        CHECK(feature_value(f, IntegralImage(img3, false), 0, 0) ==
              3 * feature_value(f, IntegralImage(img, false), 0, 0));
    }
}

TEST_CASE("eval_window vs naive reimplementation") {
    std::mt19937_64 rng(6);
    size_t accepted = 0, total = 0;
    for (bool varnorm : {false, true})
        for (int t = 0; t < 30; ++t) {
            const Cascade c = random_cascade(rng, 1 + rng() % 4, varnorm);
            const GrayImage img = blocky_image(36, 28, rng);
            const IntegralImage ii(img, varnorm);
            for (uint32_t y = 0; y + 20 <= 28; y += 2)
                for (uint32_t x = 0; x + 20 <= 36; x += 2) {
                    const bool a = eval_window(c, ii, x, y).accepted;
                    CHECK(a == naive_accept(c, img, x, y));
                    accepted += a;
                    ++total;
                }
        }
    CHECK(accepted > 0);
    CHECK(accepted < total);
}

TEST_CASE("rejection at stage k is final") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 20; ++t) {
        const Cascade c = random_cascade(rng, 5, true);
        const GrayImage img = blocky_image(30, 30, rng);
        const IntegralImage ii(img, true);
        for (uint32_t y = 0; y <= 10; ++y)
            for (uint32_t x = 0; x <= 10; ++x) {
                const WindowResult r = eval_window(c, ii, x, y);
                if (r.accepted)
                    continue;
                Cascade prefix = c;
                prefix.stages.resize(size_t(r.rejected_stage) + 1);
                CHECK_FALSE(eval_window(prefix, ii, x, y).accepted);
            }
    }
}

TEST_CASE("variance normalisation makes decisions affine invariant") {
    std::mt19937_64 rng(9);
    int same = 0, total = 0;
    for (int t = 0; t < 20; ++t) {
        const Cascade c = random_cascade(rng, 3, true);
        GrayImage img(20, 20);
        for (auto& p : img.pixels())
            p = uint8_t(20 + rng() % 100);
        GrayImage img2 = img;
        for (auto& p : img2.pixels())
            p = uint8_t(2 * p + 10);
        const bool a = eval_window(c, IntegralImage(img, true), 0, 0).accepted;
        const bool b = eval_window(c, IntegralImage(img2, true), 0, 0).accepted;
        same += a == b;
        ++total;
    }
    CHECK(same == total);
}

TEST_CASE("cascade file round trip and errors") {
    std::mt19937_64 rng(10);
    const Cascade c = random_cascade(rng, 15, true);
    CHECK(cascade_from_json(cascade_to_json(c)) == c);

    Cascade bad = c;
    bad.stages[3].weak.clear();
    CHECK_THROWS_WITH_AS(cascade_from_json(cascade_to_json(bad)), doctest::Contains("stage"),
                         Error);
    try {
        cascade_from_json(cascade_to_json(bad));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyStage);
    }
    Cascade outside = c;
    outside.stages[0].weak[0].feature.rects[0].x = 19;
    try {
        cascade_from_json(cascade_to_json(outside));
        FAIL("expected RectOutOfWindow");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RectOutOfWindow);
    }
    try {
        cascade_from_json(R"({"format":"pestdet-cascade","version":1,"window":{"w":20,"h":20}})");
        FAIL("expected MissingField");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingField);
    }
}

TEST_CASE("size accounting") {
    Cascade c;
    for (int s = 0; s < 15; ++s) {
        Stage st;
        for (int k = 0; k < 10; ++k) {
            WeakClassifier wc;
            wc.feature = two_rect();
            st.weak.push_back(wc);
        }
        c.stages.push_back(st);
    }
    // 8 + 15 * 6 + 150 * (13 + 2 * 5)
    CHECK(c.size_bytes() == 8 + 90 + 150 * 23);
    CHECK(c.size_bytes() == 3548);  // a few-kB footprint like a 15-stage device cascade
}
