#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pestdet/rect.hpp"

namespace pestdet {

struct ScoredBox {
    std::string image_id;
    Rect box;
    double score = 0.0;
};

struct GroundTruth {
    std::string image_id;
    std::vector<Rect> boxes;
};

struct EvalReport {
    uint64_t matched = 0;
    uint64_t total_gt = 0;
    uint64_t total_pred = 0;
    double detection_rate = 0.0;  ///< matched / total_gt, 0 when there is no ground truth
    uint64_t false_positives = 0;
};

double iou(const Rect& a, const Rect& b);

/// Greedy one-to-one matching on a single image. Predictions are visited by
/// descending score (input order breaks ties); each takes the unmatched ground
/// truth box of highest IoU >= iou_thr, lowest index on equal IoU.
/// `assignment`, when given, receives the matched GT index per prediction or -1.
EvalReport match_detections(const std::vector<double>& scores, const std::vector<Rect>& preds,
                            const std::vector<Rect>& gts, double iou_thr,
                            std::vector<int>* assignment = nullptr);

/// Multi-image variant: matching runs per image_id, counts are summed.
EvalReport evaluate(const std::vector<ScoredBox>& preds, const std::vector<ScoredBox>& gts,
                    double iou_thr);

/// Rows `image_id,x,y,w,h[,score]`; a leading header row is skipped when its
/// second field is not numeric. Missing scores read as 0.
std::vector<ScoredBox> parse_box_table(const std::string& text);
std::vector<ScoredBox> read_box_table(const std::string& path);

std::string format_eval_report(const EvalReport& r, double iou_thr);
std::string eval_report_json(const EvalReport& r, double iou_thr);

} // namespace pestdet
