#include "pestdet/cascade.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "pestdet/error.hpp"

namespace pestdet {

using nlohmann::json;

int64_t HaarFeature::weighted_area() const {
    int64_t s = 0;
    for (const auto& r : rects)
        s += int64_t(r.weight) * int64_t(r.w) * int64_t(r.h);
    return s;
}

bool HaarFeature::fits(uint32_t window_w, uint32_t window_h) const {
    for (const auto& r : rects)
        if (r.w == 0 || r.h == 0 || uint64_t(r.x) + r.w > window_w ||
            uint64_t(r.y) + r.h > window_h)
            return false;
    return true;
}

size_t Cascade::num_weak() const {
    size_t n = 0;
    for (const auto& s : stages)
        n += s.weak.size();
    return n;
}

size_t Cascade::size_bytes() const {
    size_t bytes = 8;
    for (const auto& s : stages) {
        bytes += 6;
        for (const auto& w : s.weak)
            bytes += 13 + 5 * w.feature.rects.size();
    }
    return bytes;
}

void Cascade::validate() const {
    if (window_w < 2 || window_h < 2)
        fail(ErrorCode::SchemaViolation, "cascade window must be at least 2x2");
    if (stages.empty())
        fail(ErrorCode::EmptyCascade, "cascade has no stages");
    for (size_t si = 0; si < stages.size(); ++si) {
        const auto& s = stages[si];
        if (s.weak.empty())
            fail(ErrorCode::EmptyStage, "stage " + std::to_string(si) + " has no weak classifiers");
        for (size_t wi = 0; wi < s.weak.size(); ++wi) {
            const auto& wc = s.weak[wi];
            const std::string where =
                "stage " + std::to_string(si) + " weak " + std::to_string(wi);
            if (wc.polarity != 1 && wc.polarity != -1)
                fail(ErrorCode::SchemaViolation, where + ": polarity must be +1 or -1");
            if (wc.feature.rects.size() < 2 || wc.feature.rects.size() > 4)
                fail(ErrorCode::SchemaViolation, where + ": feature needs 2-4 rectangles");
            if (!wc.feature.fits(window_w, window_h))
                fail(ErrorCode::RectOutOfWindow, where + ": rectangle outside the window");
            if (wc.feature.weighted_area() != 0)
                fail(ErrorCode::SchemaViolation, where + ": feature is not zero-mean");
        }
    }
}

double window_norm(const Cascade& c, const IntegralImage& ii, uint32_t x, uint32_t y) {
    if (!c.variance_normalization)
        return 1.0;
    const uint64_t n = uint64_t(c.window_w) * c.window_h;
    const uint64_t s = rect_sum_unchecked(ii, x, y, c.window_w, c.window_h);
    const uint64_t sq = rect_square_sum_unchecked(ii, x, y, c.window_w, c.window_h);
    const uint64_t var_num = n * sq - s * s;  // n^2 * variance, exact
    return std::sqrt(double(var_num)) / double(n) / kNormThresholdScale;
}

int64_t feature_value(const HaarFeature& f, const IntegralImage& ii, uint32_t x, uint32_t y,
                      double scale) {
    if (!(scale > 0.0))
        fail(ErrorCode::InvalidArgument, "feature scale must be > 0");
    int64_t v = 0;
    for (const auto& r : f.rects) {
        Rect sr;
        sr.x = x + uint32_t(std::lround(r.x * scale));
        sr.y = y + uint32_t(std::lround(r.y * scale));
        sr.w = uint32_t(std::lround(r.w * scale));
        sr.h = uint32_t(std::lround(r.h * scale));
        if (!sr.fits(ii.width(), ii.height()))
            fail(ErrorCode::OutOfBounds, "scaled feature rectangle outside raster");
        v += int64_t(r.weight) * rect_sum_unchecked(ii, sr.x, sr.y, sr.w, sr.h);
    }
    return v;
}

double stage_score(const Stage& s, const IntegralImage& ii, uint32_t x, uint32_t y, double norm) {
    double score = 0.0;
    for (const auto& wc : s.weak) {
        const int64_t v = feature_value_unchecked(wc.feature, ii, x, y);
        score += stump_passes(wc, v, norm) ? wc.vote_pass : wc.vote_fail;
    }
    return score;
}

WindowResult eval_window_unchecked(const Cascade& c, const IntegralImage& ii, uint32_t x,
                                   uint32_t y) {
    const double norm = window_norm(c, ii, x, y);
    WindowResult res;
    for (size_t k = 0; k < c.stages.size(); ++k) {
        const auto& st = c.stages[k];
        const double score = stage_score(st, ii, x, y, norm);
        res.margin = score - st.threshold;
        if (score < st.threshold) {
            res.rejected_stage = int(k);
            return res;
        }
    }
    res.accepted = true;
    return res;
}

WindowResult eval_window(const Cascade& c, const IntegralImage& ii, uint32_t x, uint32_t y) {
    if (uint64_t(x) + c.window_w > ii.width() || uint64_t(y) + c.window_h > ii.height())
        fail(ErrorCode::OutOfBounds, "window origin (" + std::to_string(x) + "," +
                                         std::to_string(y) + ") leaves the raster");
    if (c.variance_normalization && !ii.has_squares())
        fail(ErrorCode::InvalidArgument, "variance normalisation needs the squared plane");
    return eval_window_unchecked(c, ii, x, y);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr const char* kFormat = "pestdet-cascade";
constexpr int kVersion = 1;

json threshold_to_json(double t) {
    if (std::isinf(t))
        return t < 0 ? "-inf" : "inf";
    return t;
}

const json& require(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object())
        fail(ErrorCode::SchemaViolation, where + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end())
        fail(ErrorCode::MissingField, where + ": missing field '" + key + "'");
    return *it;
}

template <typename T>
T get_as(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        fail(ErrorCode::SchemaViolation, where + ": field '" + key + "' has the wrong type");
    }
}

double threshold_from_json(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "-inf")
            return -std::numeric_limits<double>::infinity();
        if (s == "inf")
            return std::numeric_limits<double>::infinity();
        fail(ErrorCode::SchemaViolation, where + ": bad threshold string '" + s + "'");
    }
    if (!v.is_number())
        fail(ErrorCode::SchemaViolation, where + ": threshold must be a number");
    return v.get<double>();
}

const json& require_array(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_array())
        fail(ErrorCode::SchemaViolation, where + ": field '" + key + "' must be an array");
    return v;
}

} // namespace

std::string cascade_to_json(const Cascade& c) {
    json stages = json::array();
    for (const auto& s : c.stages) {
        json weak = json::array();
        for (const auto& wc : s.weak) {
            json rects = json::array();
            for (const auto& r : wc.feature.rects)
                rects.push_back({{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}, {"weight", r.weight}});
            weak.push_back({{"rects", rects},
                            {"threshold", wc.threshold},
                            {"polarity", wc.polarity},
                            {"vote_pass", wc.vote_pass},
                            {"vote_fail", wc.vote_fail}});
        }
        stages.push_back({{"threshold", threshold_to_json(s.threshold)}, {"weak", weak}});
    }
    json doc = {{"format", kFormat},
                {"version", kVersion},
                {"window", {{"w", c.window_w}, {"h", c.window_h}}},
                {"variance_normalization", c.variance_normalization},
                {"stages", stages}};
    return doc.dump(1) + "\n";
}

Cascade cascade_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::SchemaViolation, std::string("cascade file is not valid JSON: ") + e.what());
    }
    const std::string top = "cascade";
    if (get_as<std::string>(doc, "format", top) != kFormat)
        fail(ErrorCode::SchemaViolation, "not a pestdet cascade file");
    if (get_as<int>(doc, "version", top) != kVersion)
        fail(ErrorCode::SchemaViolation, "unsupported cascade version");

    Cascade c;
    const json& win = require(doc, "window", top);
    c.window_w = get_as<uint32_t>(win, "w", "window");
    c.window_h = get_as<uint32_t>(win, "h", "window");
    c.variance_normalization = get_as<bool>(doc, "variance_normalization", top);

    const json& stages = require_array(doc, "stages", top);
    for (size_t si = 0; si < stages.size(); ++si) {
        const std::string sw = "stage " + std::to_string(si);
        Stage st;
        st.threshold = threshold_from_json(stages[si], "threshold", sw);
        const json& weak = require_array(stages[si], "weak", sw);
        for (size_t wi = 0; wi < weak.size(); ++wi) {
            const std::string ww = sw + " weak " + std::to_string(wi);
            WeakClassifier wc;
            wc.threshold = get_as<int64_t>(weak[wi], "threshold", ww);
            wc.polarity = get_as<int>(weak[wi], "polarity", ww);
            wc.vote_pass = get_as<double>(weak[wi], "vote_pass", ww);
            wc.vote_fail = get_as<double>(weak[wi], "vote_fail", ww);
            const json& rects = require_array(weak[wi], "rects", ww);
            for (const auto& r : rects) {
                HaarRect hr;
                hr.x = get_as<uint32_t>(r, "x", ww);
                hr.y = get_as<uint32_t>(r, "y", ww);
                hr.w = get_as<uint32_t>(r, "w", ww);
                hr.h = get_as<uint32_t>(r, "h", ww);
                hr.weight = get_as<int32_t>(r, "weight", ww);
                wc.feature.rects.push_back(hr);
            }
            st.weak.push_back(std::move(wc));
        }
        c.stages.push_back(std::move(st));
    }
    c.validate();
    return c;
}

void save_cascade(const Cascade& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        fail(ErrorCode::Io, "cannot write " + path.string());
    out << cascade_to_json(c);
}

Cascade load_cascade(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        fail(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return cascade_from_json(ss.str());
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

} // namespace pestdet
