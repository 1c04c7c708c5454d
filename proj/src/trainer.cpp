#include "pestdet/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include "parallel.hpp"
#include "pestdet/error.hpp"

namespace pestdet {

std::vector<HaarFeature> enumerate_features(uint32_t win_w, uint32_t win_h, uint32_t min_size,
                                            uint32_t stride, uint32_t templates) {
    if (win_w < 2 || win_h < 2)
        fail(ErrorCode::InvalidArgument, "feature window must be at least 2x2");
    if (min_size == 0 || stride == 0)
        fail(ErrorCode::InvalidArgument, "feature min size and stride must be >= 1");

    struct Template {
        uint32_t bit, nx, ny;
        std::vector<int32_t> weights;  // row-major over the nx x ny cell grid
    };
    const Template all[] = {
        {kTwoHorizontal, 2, 1, {1, -1}},
        {kTwoVertical, 1, 2, {1, -1}},
        {kThreeHorizontal, 3, 1, {1, -2, 1}},
        {kThreeVertical, 1, 3, {1, -2, 1}},
        {kFourChecker, 2, 2, {1, -1, -1, 1}},
    };

    std::vector<HaarFeature> out;
    for (const auto& t : all) {
        if (!(templates & t.bit))
            continue;
        for (uint32_t ch = min_size; ch * t.ny <= win_h; ++ch)
            for (uint32_t cw = min_size; cw * t.nx <= win_w; ++cw)
                for (uint32_t y = 0; y + ch * t.ny <= win_h; y += stride)
                    for (uint32_t x = 0; x + cw * t.nx <= win_w; x += stride) {
                        HaarFeature f;
                        for (uint32_t j = 0; j < t.ny; ++j)
                            for (uint32_t i = 0; i < t.nx; ++i)
                                f.rects.push_back(
                                    {x + i * cw, y + j * ch, cw, ch, t.weights[j * t.nx + i]});
                        out.push_back(std::move(f));
                    }
    }
    return out;
}

namespace {

constexpr double kMinError = 1e-10;
// Weighted errors closer than this are equal; the tie rules decide.
constexpr double kTieTolerance = 1e-12;

bool improves(double err, double best) {
    return err < best - kTieTolerance;
}

struct Prepared {
    std::vector<IntegralImage> ii;
    std::vector<double> norm;
    std::vector<char> positive;
    bool normalized = false;
};

Prepared prepare(const std::vector<const GrayImage*>& windows, const std::vector<char>& positive,
                 bool normalized, uint32_t ww, uint32_t wh) {
    Cascade probe;
    probe.window_w = ww;
    probe.window_h = wh;
    probe.variance_normalization = normalized;
    Prepared p;
    p.normalized = normalized;
    p.positive = positive;
    p.ii.reserve(windows.size());
    for (const GrayImage* w : windows) {
        if (w->width() != ww || w->height() != wh)
            fail(ErrorCode::InvalidArgument,
                 "training window is " + std::to_string(w->width()) + "x" +
                     std::to_string(w->height()) + ", expected " + std::to_string(ww) + "x" +
                     std::to_string(wh));
        p.ii.emplace_back(*w, normalized);
        p.norm.push_back(window_norm(probe, p.ii.back(), 0, 0));
    }
    return p;
}

// Per (feature, sample): the smallest integer threshold at which a +1 stump
// fails (`a`), and whether the -1 boundary coincides with it. The -1 stump
// fails up to b = exact ? a : a - 1. Flat windows never pass either polarity.
struct KeyTable {
    size_t features = 0;
    size_t samples = 0;
    std::vector<int32_t> a;
    std::vector<uint8_t> exact;
    std::vector<uint8_t> flat;
    std::vector<uint32_t> order;  // per feature, samples sorted by (a, exact)

    int32_t b(size_t f, size_t s) const {
        const size_t i = f * samples + s;
        return exact[i] ? a[i] : a[i] - 1;
    }
};

bool plus_passes(int64_t fv, int64_t t, double norm) {
    return double(fv) - double(t) * norm > 0.0;
}

void compute_key(int64_t fv, double norm, bool normalized, int32_t& a, uint8_t& exact) {
    if (!normalized) {
        a = int32_t(fv);
        exact = 1;
        return;
    }
    auto c = int64_t(std::ceil(double(fv) / norm));
    while (plus_passes(fv, c, norm))
        ++c;
    while (!plus_passes(fv, c - 1, norm))
        --c;
    a = int32_t(c);
    exact = (double(fv) - double(c) * norm == 0.0) ? 1 : 0;
}

KeyTable build_keys(const std::vector<HaarFeature>& features, const std::vector<size_t>& subset,
                    const Prepared& p, uint32_t threads) {
    KeyTable t;
    t.features = subset.size();
    t.samples = p.ii.size();
    const size_t n = t.features * t.samples;
    t.a.resize(n);
    t.exact.resize(n);
    t.order.resize(n);
    t.flat.resize(t.samples);
    for (size_t s = 0; s < t.samples; ++s)
        t.flat[s] = p.normalized && p.norm[s] == 0.0;

    detail::parallel_chunks(t.features, threads, [&](size_t fb, size_t fe, size_t) {
        std::vector<int64_t> sort_key(t.samples);
        for (size_t f = fb; f < fe; ++f) {
            const HaarFeature& feat = features[subset[f]];
            const size_t row = f * t.samples;
            for (size_t s = 0; s < t.samples; ++s) {
                if (t.flat[s]) {
                    t.a[row + s] = 0;
                    t.exact[row + s] = 1;
                } else {
                    const int64_t fv = feature_value_unchecked(feat, p.ii[s], 0, 0);
                    compute_key(fv, p.norm[s], p.normalized, t.a[row + s], t.exact[row + s]);
                }
                sort_key[s] = 2 * int64_t(t.a[row + s]) + t.exact[row + s];
            }
            uint32_t* ord = &t.order[row];
            std::iota(ord, ord + t.samples, 0u);
            std::stable_sort(ord, ord + t.samples,
                             [&](uint32_t x, uint32_t y) { return sort_key[x] < sort_key[y]; });
        }
    });
    return t;
}

struct Candidate {
    double error = std::numeric_limits<double>::infinity();
    size_t feature = 0;
    int polarity = 1;
    int64_t threshold = 0;
};

Candidate best_for_feature(const KeyTable& t, size_t f, const std::vector<double>& w,
                           const std::vector<char>& positive) {
    const size_t row = f * t.samples;
    double wp_flat = 0, wp = 0, wn = 0;
    int64_t b_min = std::numeric_limits<int64_t>::max();
    for (size_t s = 0; s < t.samples; ++s) {
        if (t.flat[s]) {
            if (positive[s])
                wp_flat += w[s];
            continue;
        }
        (positive[s] ? wp : wn) += w[s];
        b_min = std::min<int64_t>(b_min, t.b(f, s));
    }
    Candidate best;
    best.feature = f;
    const int64_t low = b_min == std::numeric_limits<int64_t>::max() ? 0 : b_min - 1;

    // +1: passes iff a > t.
    best.error = wp_flat + wn;
    best.polarity = 1;
    best.threshold = low;
    double cp = 0, cn = 0;
    for (size_t i = 0; i < t.samples;) {
        const uint32_t s0 = t.order[row + i];
        if (t.flat[s0]) {
            ++i;
            continue;
        }
        const int32_t v = t.a[row + s0];
        while (i < t.samples) {
            const uint32_t s = t.order[row + i];
            if (!t.flat[s]) {
                if (t.a[row + s] != v)
                    break;
                (positive[s] ? cp : cn) += w[s];
            }
            ++i;
        }
        const double err = wp_flat + cp + (wn - cn);
        if (improves(err, best.error)) {
            best.error = err;
            best.threshold = v;
        }
    }

    // -1: passes iff b < t.
    Candidate neg;
    neg.feature = f;
    neg.polarity = -1;
    neg.error = wp_flat + wp;
    neg.threshold = low;
    cp = cn = 0;
    for (size_t i = 0; i < t.samples;) {
        const uint32_t s0 = t.order[row + i];
        if (t.flat[s0]) {
            ++i;
            continue;
        }
        const int32_t v = t.b(f, s0);
        while (i < t.samples) {
            const uint32_t s = t.order[row + i];
            if (!t.flat[s]) {
                if (t.b(f, s) != v)
                    break;
                (positive[s] ? cp : cn) += w[s];
            }
            ++i;
        }
        const double err = wp_flat + (wp - cp) + cn;
        if (improves(err, neg.error)) {
            neg.error = err;
            neg.threshold = int64_t(v) + 1;
        }
    }
    return improves(neg.error, best.error) ? neg : best;
}

Candidate search(const KeyTable& t, const std::vector<double>& w, const std::vector<char>& positive,
                 uint32_t threads) {
    const size_t chunks = detail::chunk_count(t.features, threads);
    std::vector<Candidate> local(chunks);
    detail::parallel_chunks(t.features, threads, [&](size_t fb, size_t fe, size_t k) {
        Candidate best;
        for (size_t f = fb; f < fe; ++f) {
            const Candidate c = best_for_feature(t, f, w, positive);
            if (improves(c.error, best.error))
                best = c;
        }
        local[k] = best;
    });
    Candidate best;
    for (const auto& c : local)
        if (improves(c.error, best.error))
            best = c;
    return best;
}

bool key_passes(const KeyTable& t, size_t f, size_t s, int polarity, int64_t threshold) {
    if (t.flat[s])
        return false;
    if (polarity > 0)
        return int64_t(t.a[f * t.samples + s]) > threshold;
    return int64_t(t.b(f, s)) < threshold;
}

double alpha_of(double error) {
    const double e = std::clamp(error, kMinError, 1.0 - kMinError);
    return std::log((1.0 - e) / e);
}

std::vector<size_t> all_indices(size_t n) {
    std::vector<size_t> v(n);
    std::iota(v.begin(), v.end(), size_t{0});
    return v;
}

StageResult boost_stage(const std::vector<HaarFeature>& features, const std::vector<size_t>& subset,
                        const Prepared& p, const TrainConfig& cfg) {
    if (subset.empty())
        fail(ErrorCode::InvalidArgument, "no features to train on");
    const size_t n = p.ii.size();
    size_t m = 0;
    for (char pos : p.positive)
        m += pos ? 1 : 0;
    const size_t l = n - m;
    if (m == 0 || l == 0)
        fail(ErrorCode::InsufficientData, "stage training needs positives and negatives");

    const KeyTable keys = build_keys(features, subset, p, cfg.threads);
    std::vector<double> w(n);
    for (size_t s = 0; s < n; ++s)
        w[s] = p.positive[s] ? 0.5 / double(m) : 0.5 / double(l);

    StageResult res;
    std::vector<double> score(n, 0.0);
    std::vector<double> pos_scores;
    const size_t k = size_t(std::ceil(cfg.min_detection_rate * double(m) - 1e-9));
    const size_t keep = std::clamp<size_t>(k, 1, m);

    while (res.stage.weak.size() < cfg.max_weak_per_stage) {
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        for (double& x : w)
            x /= total;

        const Candidate c = search(keys, w, p.positive, cfg.threads);
        if (c.error >= 0.5)
            break;
        const double e = std::max(c.error, kMinError);
        const double beta = e / (1.0 - e);
        const double alpha = std::log(1.0 / beta);

        WeakClassifier wc;
        wc.feature = features[subset[c.feature]];
        wc.threshold = c.threshold;
        wc.polarity = c.polarity;
        wc.vote_pass = alpha;
        wc.vote_fail = -alpha;
        res.stage.weak.push_back(wc);

        for (size_t s = 0; s < n; ++s) {
            const bool pass = key_passes(keys, c.feature, s, c.polarity, c.threshold);
            score[s] += pass ? wc.vote_pass : wc.vote_fail;
            if (pass == bool(p.positive[s]))
                w[s] *= beta;
        }

        pos_scores.clear();
        for (size_t s = 0; s < n; ++s)
            if (p.positive[s])
                pos_scores.push_back(score[s]);
        std::nth_element(pos_scores.begin(), pos_scores.begin() + long(keep - 1), pos_scores.end(),
                         std::greater<>());
        res.stage.threshold = pos_scores[keep - 1];

        size_t tp = 0, fp = 0;
        for (size_t s = 0; s < n; ++s)
            if (score[s] >= res.stage.threshold)
                (p.positive[s] ? tp : fp) += 1;
        res.train_detection_rate = double(tp) / double(m);
        res.train_false_positive_rate = double(fp) / double(l);
        if (res.train_false_positive_rate <= cfg.max_false_positive_rate) {
            res.target_met = true;
            break;
        }
    }
    if (res.stage.weak.empty())
        fail(ErrorCode::InsufficientData, "no weak classifier beats chance on this sample set");
    return res;
}

Prepared prepare_samples(const std::vector<TrainSample>& samples, bool normalized, uint32_t ww,
                         uint32_t wh) {
    std::vector<const GrayImage*> windows;
    std::vector<char> positive;
    for (const auto& s : samples) {
        windows.push_back(&s.window);
        positive.push_back(s.positive ? 1 : 0);
    }
    return prepare(windows, positive, normalized, ww, wh);
}

} // namespace

WeakResult train_weak(const std::vector<HaarFeature>& features,
                      const std::vector<TrainSample>& samples, bool variance_normalization,
                      uint32_t threads) {
    if (features.empty() || samples.empty())
        fail(ErrorCode::InvalidArgument, "train_weak needs features and samples");
    const uint32_t ww = samples.front().window.width(), wh = samples.front().window.height();
    for (const auto& f : features)
        if (!f.fits(ww, wh))
            fail(ErrorCode::RectOutOfWindow, "feature does not fit the sample window");
    const Prepared p = prepare_samples(samples, variance_normalization, ww, wh);
    const KeyTable keys = build_keys(features, all_indices(features.size()), p, threads);
    std::vector<double> w;
    for (const auto& s : samples) {
        if (!(s.weight > 0.0))
            fail(ErrorCode::InvalidArgument, "sample weights must be positive");
        w.push_back(s.weight);
    }
    const Candidate c = search(keys, w, p.positive, threads);
    WeakResult r;
    r.feature_index = c.feature;
    r.error = c.error;
    r.degenerate = c.error >= 0.5;
    r.wc.feature = features[c.feature];
    r.wc.threshold = c.threshold;
    r.wc.polarity = c.polarity;
    const double alpha = alpha_of(c.error);
    r.wc.vote_pass = alpha;
    r.wc.vote_fail = -alpha;
    return r;
}

StageResult train_stage(const std::vector<HaarFeature>& features,
                        const std::vector<TrainSample>& samples, const TrainConfig& cfg) {
    const Prepared p =
        prepare_samples(samples, cfg.variance_normalization, cfg.window_w, cfg.window_h);
    return boost_stage(features, all_indices(features.size()), p, cfg);
}

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

struct Mined {
    uint64_t key;
    GrayImage window;
};

struct MineResult {
    PoolStats stats;
    std::vector<Mined> picked;  // ascending key
};

// Scans the pool and keeps the `want` accepted windows with the smallest
// pseudo-random keys: a uniform sample without replacement that does not
// depend on the thread count.
MineResult mine(const Cascade& c, const std::vector<GrayImage>& pool, const PyramidConfig& pyr,
                uint32_t step, size_t want, uint64_t salt, uint32_t threads) {
    if (step == 0)
        fail(ErrorCode::InvalidArgument, "mining step must be >= 1");
    const size_t chunks = detail::chunk_count(pool.size(), threads);
    std::vector<PoolStats> stats(chunks);
    std::vector<std::vector<Mined>> heaps(chunks);
    auto by_key = [](const Mined& a, const Mined& b) { return a.key < b.key; };

    detail::parallel_chunks(pool.size(), threads, [&](size_t ib, size_t ie, size_t k) {
        auto& heap = heaps[k];
        auto& st = stats[k];
        for (size_t img = ib; img < ie; ++img) {
            const auto dims = pyramid_dims(pool[img].width(), pool[img].height(), pyr);
            for (uint32_t lv = 0; lv < dims.size(); ++lv) {
                const auto [w, h] = dims[lv];
                if (w < c.window_w || h < c.window_h)
                    break;
                const GrayImage level = lv == 0 ? pool[img] : downscale(pool[img], w, h);
                const IntegralImage ii(level, c.variance_normalization);
                for (uint32_t y = 0; y + c.window_h <= h; y += step)
                    for (uint32_t x = 0; x + c.window_w <= w; x += step) {
                        ++st.windows;
                        if (!c.stages.empty() && !eval_window_unchecked(c, ii, x, y).accepted)
                            continue;
                        ++st.accepted;
                        if (want == 0)
                            continue;
                        const uint64_t key = splitmix64(
                            salt ^ splitmix64((uint64_t(img) << 40) ^ (uint64_t(lv) << 32) ^
                                              (uint64_t(y) << 16) ^ x));
                        if (heap.size() < want) {
                            heap.push_back({key, level.crop({x, y, c.window_w, c.window_h})});
                            std::push_heap(heap.begin(), heap.end(), by_key);
                        } else if (key < heap.front().key) {
                            std::pop_heap(heap.begin(), heap.end(), by_key);
                            heap.back() = {key, level.crop({x, y, c.window_w, c.window_h})};
                            std::push_heap(heap.begin(), heap.end(), by_key);
                        }
                    }
            }
        }
    });

    MineResult r;
    for (size_t k = 0; k < chunks; ++k) {
        r.stats.windows += stats[k].windows;
        r.stats.accepted += stats[k].accepted;
        for (auto& m : heaps[k])
            r.picked.push_back(std::move(m));
    }
    std::sort(r.picked.begin(), r.picked.end(), by_key);
    if (r.picked.size() > want)
        r.picked.erase(r.picked.begin() + long(want), r.picked.end());
    return r;
}

} // namespace

PoolStats scan_pool(const Cascade& c, const std::vector<GrayImage>& pool, const PyramidConfig& pyr,
                    uint32_t step, uint32_t threads) {
    return mine(c, pool, pyr, step, 0, 0, threads).stats;
}

TrainResult train_cascade(const std::vector<GrayImage>& positives,
                          const std::vector<GrayImage>& neg_pool, const TrainConfig& cfg) {
    if (positives.size() < 10)
        fail(ErrorCode::InsufficientData, "need at least 10 positives, got " +
                                              std::to_string(positives.size()));
    if (neg_pool.empty())
        fail(ErrorCode::InsufficientData, "negative pool is empty");
    if (cfg.num_stages == 0)
        fail(ErrorCode::InvalidArgument, "num_stages must be >= 1");
    if (!(cfg.max_false_positive_rate > 0.0 && cfg.max_false_positive_rate < 1.0))
        fail(ErrorCode::InvalidArgument, "per-stage false-positive target must lie in (0, 1)");
    if (!(cfg.min_detection_rate > 0.0 && cfg.min_detection_rate <= 1.0))
        fail(ErrorCode::InvalidArgument, "per-stage detection rate must lie in (0, 1]");
    if (!(cfg.feature_fraction > 0.0 && cfg.feature_fraction <= 1.0))
        fail(ErrorCode::InvalidArgument, "feature fraction must lie in (0, 1]");

    const auto features = enumerate_features(cfg.window_w, cfg.window_h, cfg.feature_min_size,
                                             cfg.feature_stride);
    TrainResult res;
    res.cascade.window_w = cfg.window_w;
    res.cascade.window_h = cfg.window_h;
    res.cascade.variance_normalization = cfg.variance_normalization;

    for (uint32_t st = 0; st < cfg.num_stages; ++st) {
        const uint64_t salt = splitmix64(cfg.seed ^ (uint64_t(st + 1) << 48));
        MineResult mined = mine(res.cascade, neg_pool, cfg.pool_pyramid, cfg.mining_step,
                                cfg.negatives_per_stage, salt, cfg.threads);
        res.pool_windows = mined.stats.windows;
        if (st > 0)
            res.log.back().pool_fp_rate = mined.stats.rate();
        if (mined.picked.size() < std::max<uint32_t>(1, cfg.min_negatives)) {
            res.stopped_early = true;
            res.stop_reason = "negative pool exhausted before stage " + std::to_string(st) +
                              " (" + std::to_string(mined.picked.size()) + " windows left)";
            return res;
        }

        std::vector<const GrayImage*> windows;
        std::vector<char> positive;
        for (const auto& img : positives) {
            windows.push_back(&img);
            positive.push_back(1);
        }
        for (const auto& m : mined.picked) {
            windows.push_back(&m.window);
            positive.push_back(0);
        }
        const Prepared p =
            prepare(windows, positive, cfg.variance_normalization, cfg.window_w, cfg.window_h);

        std::vector<size_t> subset = all_indices(features.size());
        if (cfg.feature_fraction < 1.0) {
            std::mt19937_64 rng(splitmix64(cfg.seed + st));
            std::shuffle(subset.begin(), subset.end(), rng);
            const auto keep = std::max<size_t>(
                1, size_t(std::ceil(cfg.feature_fraction * double(features.size()))));
            subset.resize(keep);
            std::sort(subset.begin(), subset.end());
        }

        StageResult sr = boost_stage(features, subset, p, cfg);
        StageLog row;
        row.stage = st;
        row.num_weak = uint32_t(sr.stage.weak.size());
        row.threshold = sr.stage.threshold;
        row.train_detection_rate = sr.train_detection_rate;
        row.train_false_positive_rate = sr.train_false_positive_rate;
        row.positives = positives.size();
        row.negatives = mined.picked.size();
        row.target_met = sr.target_met;
        res.cascade.stages.push_back(std::move(sr.stage));
        res.log.push_back(row);
    }
    const PoolStats fin = scan_pool(res.cascade, neg_pool, cfg.pool_pyramid, cfg.mining_step,
                                    cfg.threads);
    res.log.back().pool_fp_rate = fin.rate();
    res.pool_windows = fin.windows;
    return res;
}

std::string format_training_log(const TrainResult& r) {
    std::string out = "stage,weak,threshold,train_dr,train_fp,positives,negatives,pool_fp,target_met\n";
    char buf[256];
    for (const auto& row : r.log) {
        std::snprintf(buf, sizeof buf, "%u,%u,%.9g,%.6f,%.6f,%llu,%llu,%.9g,%d\n", row.stage,
                      row.num_weak, row.threshold, row.train_detection_rate,
                      row.train_false_positive_rate, (unsigned long long)row.positives,
                      (unsigned long long)row.negatives, row.pool_fp_rate, row.target_met ? 1 : 0);
        out += buf;
    }
    if (r.stopped_early)
        out += "# stopped early: " + r.stop_reason + "\n";
    return out;
}

} // namespace pestdet
