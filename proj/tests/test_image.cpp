#include <cmath>
#include <random>

#include "doctest.h"
#include "pestdet/error.hpp"
#include "pestdet/image.hpp"
#include "pestdet/integral.hpp"

using namespace pestdet;

namespace {

std::vector<uint8_t> bytes(const std::string& header, std::vector<uint8_t> px) {
    std::vector<uint8_t> v(header.begin(), header.end());
    v.insert(v.end(), px.begin(), px.end());
    return v;
}

ErrorCode code_of(const std::vector<uint8_t>& v) {
    try {
        load_pgm(v);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode(0);
}

GrayImage random_image(uint32_t w, uint32_t h, std::mt19937_64& rng) {
    GrayImage img(w, h);
    std::uniform_int_distribution<int> d(0, 255);
    for (auto& p : img.pixels())
        p = uint8_t(d(rng));
    return img;
}

} // namespace

TEST_CASE("pgm decode") {
    const GrayImage img = load_pgm(bytes("P5\n2 2\n255\n", {0, 255, 128, 64}));
    CHECK(img.width() == 2);
    CHECK(img.at(0, 0) == 0);
    CHECK(img.at(1, 0) == 255);
    CHECK(img.at(0, 1) == 128);
    CHECK(img.at(1, 1) == 64);

    CHECK(load_pgm(bytes("P5 # c\n# more\n2 1 255\n", {7, 9})).at(1, 0) == 9);
}

TEST_CASE("pgm errors are distinct") {
    CHECK(code_of(bytes("P2\n2 2\n255\n", {0, 0, 0, 0})) == ErrorCode::MalformedHeader);
    CHECK(code_of(bytes("P5\n2 2\n65535\n", {0, 0, 0, 0})) == ErrorCode::MaxvalUnsupported);
    CHECK(code_of(bytes("P5\n2 2\n255\n", {0, 0, 0})) == ErrorCode::TruncatedData);
    CHECK(code_of(bytes("P5\n2\n", {})) == ErrorCode::MalformedHeader);
}

TEST_CASE("pgm 320x240 payload") {
    std::vector<uint8_t> px(76800, 17);
    const GrayImage img = load_pgm(bytes("P5\n320 240\n255\n", px));
    CHECK(img.size() == 76800);
}

TEST_CASE("pgm round trip") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        const GrayImage img = random_image(1 + rng() % 40, 1 + rng() % 40, rng);
        CHECK(load_pgm(save_pgm(img)) == img);
    }
}

TEST_CASE("sensor_degrade") {
    std::mt19937_64 rng(5);
    const GrayImage img = random_image(50, 40, rng);
    CHECK(sensor_degrade(img, 0.0, 9) == img);
    CHECK(sensor_degrade(img, 10.0, 9) == sensor_degrade(img, 10.0, 9));
    CHECK_FALSE(sensor_degrade(img, 10.0, 9) == sensor_degrade(img, 10.0, 10));

    const GrayImage flat(320, 240, 128);
    const GrayImage n = sensor_degrade(flat, 10.0, 1);
    double s = 0, s2 = 0;
    for (uint8_t p : n.pixels()) {
        s += p;
        s2 += double(p) * p;
    }
    const double mean = s / n.size();
    const double sd = std::sqrt(s2 / n.size() - mean * mean);
    CHECK(std::abs(mean - 128.0) <= 1.0);
    CHECK(sd == doctest::Approx(10.0).epsilon(0.15));
}

TEST_CASE("downscale") {
    std::mt19937_64 rng(8);
    const GrayImage img = random_image(33, 21, rng);
    CHECK(downscale(img, 33, 21) == img);
    CHECK(downscale(GrayImage(40, 30, 77), 13, 7) == GrayImage(13, 7, 77));
    CHECK_THROWS_AS(downscale(img, 34, 21), Error);

    // 4x4 ramp 16x + 64y to 2x2: each output is the mean of its 2x2 block
    GrayImage ramp(4, 4);
    for (uint32_t y = 0; y < 4; ++y)
        for (uint32_t x = 0; x < 4; ++x)
            ramp.at(x, y) = uint8_t(16 * x + 64 * y);
    const GrayImage d = downscale(ramp, 2, 2);
    CHECK(d.at(0, 0) == 40);
    CHECK(d.at(1, 0) == 72);
    CHECK(d.at(0, 1) == 168);
    CHECK(d.at(1, 1) == 200);

    for (int i = 0; i < 20; ++i) {
        const GrayImage src = random_image(10 + rng() % 50, 10 + rng() % 50, rng);
        const uint8_t lo = *std::min_element(src.pixels().begin(), src.pixels().end());
        const uint8_t hi = *std::max_element(src.pixels().begin(), src.pixels().end());
        const GrayImage o = downscale(src, 1 + rng() % src.width(), 1 + rng() % src.height());
        for (uint8_t p : o.pixels()) {
            CHECK(p >= lo);
            CHECK(p <= hi);
        }
    }
}

TEST_CASE("integral hand values") {
    const GrayImage img(2, 2, std::vector<uint8_t>{1, 2, 3, 4});
    const IntegralImage ii = build_integral(img, true);
    CHECK(ii.at(0, 0) == 1);
    CHECK(ii.at(1, 0) == 3);
    CHECK(ii.at(0, 1) == 4);
    CHECK(ii.at(1, 1) == 10);
    CHECK(ii.square_at(1, 1) == 30);
    CHECK(rect_sum(ii, {0, 0, 2, 2}) == 10);
    CHECK(rect_sum(ii, {1, 1, 1, 1}) == 4);
    CHECK_THROWS_AS(rect_sum(ii, {1, 1, 2, 1}), Error);

    const IntegralImage z = build_integral(GrayImage(5, 4, 0), false);
    for (uint32_t v : z.sums())
        CHECK(v == 0);
}

TEST_CASE("integral vs naive double loop") {
    std::mt19937_64 rng(11);
    const GrayImage img = random_image(37, 23, rng);
    const IntegralImage ii = build_integral(img, true);
    for (uint32_t y = 0; y < 23; ++y)
        for (uint32_t x = 0; x < 37; ++x) {
            uint64_t s = 0, q = 0;
            for (uint32_t j = 0; j <= y; ++j)
                for (uint32_t i = 0; i <= x; ++i) {
                    s += img.at(i, j);
                    q += uint64_t(img.at(i, j)) * img.at(i, j);
                }
            REQUIRE(ii.at(x, y) == s);
            REQUIRE(ii.square_at(x, y) == q);
        }
    for (uint32_t y = 0; y < 23; ++y)
        for (uint32_t x = 0; x < 37; ++x)
            REQUIRE(rect_sum(ii, {x, y, 1, 1}) == img.at(x, y));
}

TEST_CASE("rect_sum additivity and translation") {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 200; ++t) {
        const GrayImage img = random_image(30, 30, rng);
        const IntegralImage ii = build_integral(img, false);
        const uint32_t x = rng() % 20, y = rng() % 20, w = 2 + rng() % 9, h = 1 + rng() % 10;
        const uint32_t split = 1 + rng() % (w - 1);
        CHECK(rect_sum(ii, {x, y, w, h}) ==
              rect_sum(ii, {x, y, split, h}) + rect_sum(ii, {x + split, y, w - split, h}));

        GrayImage canvas(40, 40, 0);
        const uint32_t dx = rng() % 10, dy = rng() % 10;
        for (uint32_t j = 0; j < 30; ++j)
            for (uint32_t i = 0; i < 30; ++i)
                canvas.at(i + dx, j + dy) = img.at(i, j);
        const IntegralImage ci = build_integral(canvas, false);
        CHECK(rect_sum(ci, {x + dx, y + dy, w, h}) == rect_sum(ii, {x, y, w, h}));
    }
}

TEST_CASE("integral overflow guard") {
    CHECK_THROWS_AS(build_integral(GrayImage(4097, 4096, 0), false), Error);
}
