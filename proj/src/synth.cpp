#include "pestdet/synth.hpp"

#include <algorithm>
#include <cmath>

#include "pestdet/error.hpp"

namespace pestdet {

namespace {

uint8_t clamp_px(double v) {
    return uint8_t(std::clamp(std::lround(v), 0l, 255l));
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Soft-edged filled ellipse: blends `value` in with coverage falling off over
// one pixel at the rim.
void blend_ellipse(std::vector<double>& buf, uint32_t w, uint32_t h, double cx, double cy, double a,
                   double b, double theta, double value) {
    const double c = std::cos(theta), s = std::sin(theta);
    const double r = std::max(a, b) + 2;
    const int x0 = std::max(0, int(std::floor(cx - r))), x1 = std::min(int(w) - 1, int(std::ceil(cx + r)));
    const int y0 = std::max(0, int(std::floor(cy - r))), y1 = std::min(int(h) - 1, int(std::ceil(cy + r)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
            const double u = (dx * c + dy * s) / a, v = (-dx * s + dy * c) / b;
            const double d = std::sqrt(u * u + v * v);
            const double edge = (d - 1.0) * std::min(a, b);
            const double k = std::clamp(0.5 - edge, 0.0, 1.0);
            if (k > 0) {
                double& px = buf[size_t(y) * w + x];
                px = px * (1 - k) + value * k;
            }
        }
}

void draw_line(std::vector<double>& buf, uint32_t w, uint32_t h, double x0, double y0, double len,
               double theta, double delta) {
    const int n = int(std::ceil(len * 2));
    for (int i = 0; i <= n; ++i) {
        const double t = len * i / n;
        const int x = int(std::floor(x0 + t * std::cos(theta)));
        const int y = int(std::floor(y0 + t * std::sin(theta)));
        if (x >= 0 && y >= 0 && x < int(w) && y < int(h))
            buf[size_t(y) * w + x] += delta / 2;  // two samples per pixel on average
    }
}

GrayImage quantize(const std::vector<double>& buf, uint32_t w, uint32_t h, double sigma,
                   std::mt19937_64& rng) {
    GrayImage img(w, h);
    std::normal_distribution<double> noise(0.0, sigma > 0 ? sigma : 1.0);
    auto px = img.pixels();
    for (size_t i = 0; i < buf.size(); ++i)
        px[i] = clamp_px(buf[i] + (sigma > 0 ? noise(rng) : 0.0));
    return img;
}

std::vector<double> background_buffer(uint32_t w, uint32_t h, std::mt19937_64& rng,
                                      const SynthConfig& cfg) {
    const double base = uniform(rng, 80, 190);
    const double gx = uniform(rng, -0.12, 0.12), gy = uniform(rng, -0.12, 0.12);
    const double amp = uniform(rng, 0, 5), fx = uniform(rng, 0.02, 0.1), fy = uniform(rng, 0.02, 0.1);
    const double ph = uniform(rng, 0, 6.283);
    std::vector<double> buf(size_t(w) * h);
    const double mx = w / 2.0, my = h / 2.0;
    for (uint32_t y = 0; y < h; ++y)
        for (uint32_t x = 0; x < w; ++x)
            buf[size_t(y) * w + x] = base + gx * (x - mx) + gy * (y - my) +
                                     amp * std::sin(fx * x + fy * y + ph);

    for (const auto& [cell, amp_tex] : {std::pair{10.0, 14.0}, std::pair{3.0, 7.0}}) {
        const auto gw = uint32_t(w / cell) + 2, gh = uint32_t(h / cell) + 2;
        std::vector<double> grid(size_t(gw) * gh);
        for (double& g : grid)
            g = uniform(rng, -amp_tex, amp_tex);
        for (uint32_t y = 0; y < h; ++y)
            for (uint32_t x = 0; x < w; ++x) {
                const double fxc = x / cell, fyc = y / cell;
                const auto ix = uint32_t(fxc), iy = uint32_t(fyc);
                const double tx = fxc - ix, ty = fyc - iy;
                const double v = grid[iy * gw + ix] * (1 - tx) * (1 - ty) +
                                 grid[iy * gw + ix + 1] * tx * (1 - ty) +
                                 grid[(iy + 1) * gw + ix] * (1 - tx) * ty +
                                 grid[(iy + 1) * gw + ix + 1] * tx * ty;
                buf[size_t(y) * w + x] += v;
            }
    }

    const auto clutter = uint32_t(std::llround(double(cfg.clutter_per_10k_px) * w * h / 10000.0));
    for (uint32_t i = 0; i < clutter; ++i) {
        const double cx = uniform(rng, 0, w), cy = uniform(rng, 0, h);
        const double local = buf[size_t(cy) * w + size_t(cx)];
        switch (std::uniform_int_distribution<int>(0, 8)(rng)) {
        case 0: {  // small dark dot
            const double r = uniform(rng, 0.8, 3.0);
            blend_ellipse(buf, w, h, cx, cy, r, r, 0, local - uniform(rng, 30, 90));
            break;
        }
        case 1:  // thin line
            draw_line(buf, w, h, cx, cy, uniform(rng, 10, 60), uniform(rng, 0, 3.1416),
                      uniform(rng, -60, 60));
            break;
        case 2: {  // bright blob
            const double a = uniform(rng, 3, 10);
            blend_ellipse(buf, w, h, cx, cy, a, a * uniform(rng, 0.5, 1.0), uniform(rng, 0, 3.1416),
                          local + uniform(rng, 25, 60));
            break;
        }
        case 3: {  // roundish dark insect
            const double a = uniform(rng, 4, 8);
            blend_ellipse(buf, w, h, cx, cy, a, a * uniform(rng, 0.75, 1.0), uniform(rng, 0, 3.1416),
                          uniform(rng, 15, 70));
            break;
        }
        case 4: {  // elongated insect standing across the moth orientation
            const double a = uniform(rng, 6, 10);
            blend_ellipse(buf, w, h, cx, cy, a, a * uniform(rng, 0.4, 0.6),
                          1.5708 + uniform(rng, -0.5, 0.5), uniform(rng, 15, 70));
            break;
        }
        case 5: {  // small dark bug
            const double a = uniform(rng, 2.5, 5);
            blend_ellipse(buf, w, h, cx, cy, a, a * uniform(rng, 0.4, 0.7), uniform(rng, 0, 3.1416),
                          uniform(rng, 15, 70));
            break;
        }
        case 6: {  // small moth-like blob, below the smallest detectable size
            const double a = uniform(rng, 4.5, 6);
            blend_ellipse(buf, w, h, cx, cy, a, a * uniform(rng, 0.42, 0.58), uniform(rng, -0.3, 0.3),
                          uniform(rng, 15, 70));
            break;
        }
        case 7: {  // pale moth-shaped patch
            const double a = uniform(rng, 7.5, 9);
            blend_ellipse(buf, w, h, cx, cy, a, a * uniform(rng, 0.42, 0.58), uniform(rng, -0.3, 0.3),
                          local + uniform(rng, 30, 70));
            break;
        }
        default: {  // large smudge
            const double a = uniform(rng, 16, 26);
            blend_ellipse(buf, w, h, cx, cy, a, a * uniform(rng, 0.4, 1.0), uniform(rng, 0, 3.1416),
                          local - uniform(rng, 20, 70));
            break;
        }
        }
    }
    if (std::uniform_int_distribution<int>(0, 1)(rng)) {  // printed trap grid
        const double pitch = uniform(rng, 20, 40), delta = -uniform(rng, 10, 30);
        for (double gx0 = uniform(rng, 0, pitch); gx0 < w; gx0 += pitch)
            draw_line(buf, w, h, gx0, 0, h, 1.5708, delta);
        for (double gy0 = uniform(rng, 0, pitch); gy0 < h; gy0 += pitch)
            draw_line(buf, w, h, 0, gy0, w, 0, delta);
    }
    return buf;
}

Rect moth_box(double cx, double cy, uint32_t side, uint32_t w, uint32_t h) {
    const long x = std::clamp(std::lround(cx - side / 2.0), 0l, long(w) - 1);
    const long y = std::clamp(std::lround(cy - side / 2.0), 0l, long(h) - 1);
    return {uint32_t(x), uint32_t(y), std::min<uint32_t>(side, w - uint32_t(x)),
            std::min<uint32_t>(side, h - uint32_t(y))};
}

void moth_into(std::vector<double>& buf, uint32_t w, uint32_t h, double cx, double cy,
               std::mt19937_64& rng, const SynthConfig& cfg) {
    const double len = uniform(rng, cfg.moth_length_min, cfg.moth_length_max);
    const double a = len / 2, b = a * uniform(rng, 0.42, 0.58);
    const double theta = uniform(rng, -0.3, 0.3);
    const double dark = uniform(rng, 15, 70);
    blend_ellipse(buf, w, h, cx, cy, a, b, theta, dark);
    // paler wing tips on one end
    const double side = std::uniform_int_distribution<int>(0, 1)(rng) ? 1.0 : -1.0;
    blend_ellipse(buf, w, h, cx + side * 0.6 * a * std::cos(theta), cy + side * 0.6 * a * std::sin(theta),
                  a * 0.3, b * 0.7, theta, dark + uniform(rng, 10, 30));
}

} // namespace

GrayImage synth_background(uint32_t width, uint32_t height, std::mt19937_64& rng,
                           const SynthConfig& cfg) {
    if (width == 0 || height == 0)
        fail(ErrorCode::InvalidArgument, "synthetic image needs positive dimensions");
    auto buf = background_buffer(width, height, rng, cfg);
    return quantize(buf, width, height, cfg.noise_sigma, rng);
}

Rect draw_moth(GrayImage& img, double cx, double cy, std::mt19937_64& rng, const SynthConfig& cfg,
               uint32_t box_side) {
    std::vector<double> buf(img.pixels().begin(), img.pixels().end());
    const std::vector<double> before = buf;
    moth_into(buf, img.width(), img.height(), cx, cy, rng, cfg);
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma > 0 ? cfg.noise_sigma : 1.0);
    auto px = img.pixels();
    for (size_t i = 0; i < buf.size(); ++i)
        if (buf[i] != before[i])
            px[i] = clamp_px(buf[i] + (cfg.noise_sigma > 0 ? noise(rng) : 0.0));
    return moth_box(cx, cy, box_side, img.width(), img.height());
}

GrayImage synth_positive(std::mt19937_64& rng, const SynthConfig& cfg, uint32_t side) {
    auto buf = background_buffer(side, side, rng, SynthConfig{cfg.noise_sigma, cfg.moth_length_min,
                                                             cfg.moth_length_max, 0});
    const double cx = side / 2.0 + uniform(rng, -1, 1), cy = side / 2.0 + uniform(rng, -1, 1);
    moth_into(buf, side, side, cx, cy, rng, cfg);
    return quantize(buf, side, side, cfg.noise_sigma, rng);
}

SynthScene synth_scene(uint32_t width, uint32_t height, uint32_t count, std::mt19937_64& rng,
                       const SynthConfig& cfg) {
    if (width < 24 || height < 24)
        fail(ErrorCode::InvalidArgument, "scene must be at least 24x24");
    auto buf = background_buffer(width, height, rng, cfg);
    SynthScene sc{GrayImage(width, height), {}};
    std::vector<std::pair<double, double>> centres;
    for (uint32_t attempt = 0; centres.size() < count && attempt < 1000 * (count + 1); ++attempt) {
        const double cx = uniform(rng, 12, width - 12), cy = uniform(rng, 12, height - 12);
        bool clear = true;
        for (const auto& [ox, oy] : centres)
            if (std::abs(ox - cx) < 26 && std::abs(oy - cy) < 26)
                clear = false;
        if (!clear)
            continue;
        centres.emplace_back(cx, cy);
        moth_into(buf, width, height, cx, cy, rng, cfg);
        sc.targets.push_back(moth_box(cx, cy, 20, width, height));
    }
    sc.image = quantize(buf, width, height, cfg.noise_sigma, rng);
    return sc;
}

SynthCorpus synth_corpus(uint32_t n_train_pos, uint32_t n_test_pos, uint32_t n_train_neg,
                         uint32_t n_test_neg, uint32_t neg_w, uint32_t neg_h, uint64_t seed,
                         const SynthConfig& cfg) {
    std::mt19937_64 rng(seed);
    SynthCorpus c;
    for (uint32_t i = 0; i < n_train_pos; ++i)
        c.train_positives.push_back(synth_positive(rng, cfg));
    for (uint32_t i = 0; i < n_test_pos; ++i)
        c.test_positives.push_back(synth_positive(rng, cfg));
    for (uint32_t i = 0; i < n_train_neg; ++i)
        c.train_negatives.push_back(synth_background(neg_w, neg_h, rng, cfg));
    for (uint32_t i = 0; i < n_test_neg; ++i)
        c.test_negatives.push_back(synth_background(neg_w, neg_h, rng, cfg));
    return c;
}

} // namespace pestdet
