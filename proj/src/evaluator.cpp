#include "pestdet/evaluator.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "pestdet/error.hpp"

namespace pestdet {

double iou(const Rect& a, const Rect& b) {
    const uint64_t ix0 = std::max(a.x, b.x), iy0 = std::max(a.y, b.y);
    const uint64_t ix1 = std::min<uint64_t>(uint64_t(a.x) + a.w, uint64_t(b.x) + b.w);
    const uint64_t iy1 = std::min<uint64_t>(uint64_t(a.y) + a.h, uint64_t(b.y) + b.h);
    if (ix1 <= ix0 || iy1 <= iy0)
        return 0.0;
    const uint64_t inter = (ix1 - ix0) * (iy1 - iy0);
    const uint64_t uni = a.area() + b.area() - inter;
    return uni == 0 ? 0.0 : double(inter) / double(uni);
}

EvalReport match_detections(const std::vector<double>& scores, const std::vector<Rect>& preds,
                            const std::vector<Rect>& gts, double iou_thr,
                            std::vector<int>* assignment) {
    if (scores.size() != preds.size())
        fail(ErrorCode::InvalidArgument, "one score per prediction required");
    if (!(iou_thr > 0.0 && iou_thr <= 1.0))
        fail(ErrorCode::InvalidArgument, "IoU threshold must lie in (0, 1]");
    std::vector<size_t> order(preds.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    std::vector<bool> taken(gts.size(), false);
    if (assignment)
        assignment->assign(preds.size(), -1);
    EvalReport r;
    r.total_gt = gts.size();
    r.total_pred = preds.size();
    for (size_t p : order) {
        int best = -1;
        double best_iou = 0.0;
        for (size_t g = 0; g < gts.size(); ++g) {
            if (taken[g])
                continue;
            const double v = iou(preds[p], gts[g]);
            if (v >= iou_thr && v > best_iou) {
                best = int(g);
                best_iou = v;
            }
        }
        if (best >= 0) {
            taken[size_t(best)] = true;
            ++r.matched;
            if (assignment)
                (*assignment)[p] = best;
        }
    }
    r.false_positives = r.total_pred - r.matched;
    r.detection_rate = r.total_gt ? double(r.matched) / double(r.total_gt) : 0.0;
    return r;
}

EvalReport evaluate(const std::vector<ScoredBox>& preds, const std::vector<ScoredBox>& gts,
                    double iou_thr) {
    struct PerImage {
        std::vector<double> scores;
        std::vector<Rect> preds;
        std::vector<Rect> gts;
    };
    std::map<std::string, PerImage> images;
    for (const auto& p : preds) {
        auto& im = images[p.image_id];
        im.scores.push_back(p.score);
        im.preds.push_back(p.box);
    }
    for (const auto& g : gts)
        images[g.image_id].gts.push_back(g.box);

    EvalReport total;
    for (const auto& [id, im] : images) {
        const EvalReport r = match_detections(im.scores, im.preds, im.gts, iou_thr);
        total.matched += r.matched;
        total.total_gt += r.total_gt;
        total.total_pred += r.total_pred;
    }
    total.false_positives = total.total_pred - total.matched;
    total.detection_rate = total.total_gt ? double(total.matched) / double(total.total_gt) : 0.0;
    return total;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r' && ch != ' ' && ch != '\t') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

bool parse_u32(const std::string& s, uint32_t& v) {
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

} // namespace

std::vector<ScoredBox> parse_box_table(const std::string& text) {
    std::vector<ScoredBox> rows;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r" || line[0] == '#')
            continue;
        const auto f = split_fields(line);
        uint32_t probe = 0;
        if (first && (f.size() < 2 || !parse_u32(f[1], probe))) {
            first = false;
            continue;
        }
        first = false;
        if (f.size() < 5)
            fail(ErrorCode::SchemaViolation,
                 "line " + std::to_string(lineno) + ": expected image_id,x,y,w,h[,score]");
        ScoredBox b;
        b.image_id = f[0];
        if (!parse_u32(f[1], b.box.x) || !parse_u32(f[2], b.box.y) || !parse_u32(f[3], b.box.w) ||
            !parse_u32(f[4], b.box.h))
            fail(ErrorCode::SchemaViolation,
                 "line " + std::to_string(lineno) + ": box fields must be unsigned integers");
        if (f.size() >= 6 && !f[5].empty()) {
            try {
                b.score = std::stod(f[5]);
            } catch (const std::exception&) {
                fail(ErrorCode::SchemaViolation,
                     "line " + std::to_string(lineno) + ": bad score '" + f[5] + "'");
            }
        }
        rows.push_back(std::move(b));
    }
    return rows;
}

std::vector<ScoredBox> read_box_table(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        fail(ErrorCode::Io, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_box_table(ss.str());
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.what());
    }
}

std::string format_eval_report(const EvalReport& r, double iou_thr) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "iou_threshold,matched,total_gt,total_pred,false_positives,detection_rate\n"
                  "%.6g,%llu,%llu,%llu,%llu,%.6f\n",
                  iou_thr, (unsigned long long)r.matched, (unsigned long long)r.total_gt,
                  (unsigned long long)r.total_pred, (unsigned long long)r.false_positives,
                  r.detection_rate);
    return buf;
}

std::string eval_report_json(const EvalReport& r, double iou_thr) {
    nlohmann::ordered_json j = {{"iou_threshold", iou_thr},
                                {"matched", r.matched},
                                {"total_gt", r.total_gt},
                                {"total_pred", r.total_pred},
                                {"false_positives", r.false_positives},
                                {"detection_rate", r.detection_rate}};
    return j.dump(2) + "\n";
}

} // namespace pestdet
