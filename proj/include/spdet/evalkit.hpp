#pragma once

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace spdet {

struct Box {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double area() const { return w * h; }
    bool operator==(const Box&) const = default;
};

double intersection_area(const Box& a, const Box& b);
/// Intersection over union.
double iou(const Box& a, const Box& b);
/// Intersection over the smaller of the two areas.
double min_area_overlap(const Box& a, const Box& b);

struct ScoredBox {
    Box box;
    double score = 0.0;
};

struct GtBox {
    Box box;
    double visible = 1.0;
    bool ignore = false;
    std::string label = "person";
};

inline constexpr double kReasonableMinHeight = 50.0;
inline constexpr double kReasonableMinVisible = 0.65;

/// Sets `ignore` on every box: a "person" box is ignored iff it is shorter than
/// 50 px or less than 65% visible; boxes with any other label are always ignored.
/// Nothing is removed.
std::vector<GtBox> filter_reasonable(std::vector<GtBox> gt);

enum class Outcome { TruePositive, FalsePositive, Ignored };

struct FrameMatch {
    std::vector<double> scores;     // per detection, input order
    std::vector<Outcome> outcome;   // per detection, input order
    std::vector<int> matched_gt;    // per detection: gt index or -1
    std::vector<bool> gt_detected;  // per gt
    int true_positives = 0;
    int false_positives = 0;
    int ignored = 0;
    int missed = 0;
    int gt_count = 0;  // non-ignored ground truth
};

/// Greedy matching in descending score order (ties by input index).
FrameMatch match_frame(std::span<const ScoredBox> dets, std::span<const GtBox> gt, double iou_thresh = 0.5);

struct RocPoint {
    double threshold = 0.0;
    double fppi = 0.0;
    double miss_rate = 1.0;
};

/// Operating points ordered by descending threshold (so FPPI is non-decreasing
/// along the vector).
struct RocCurve {
    std::vector<RocPoint> points;
    int images = 0;
    int gt_count = 0;
};

RocCurve roc(std::span<const FrameMatch> frames);

/// Curve from bare scores: each positive is one ground truth matched by its own
/// score (non-finite scores never match); each negative is a false positive.
RocCurve roc_from_scores(std::span<const double> pos_scores, std::span<const double> neg_scores, int images);

inline constexpr int kLamrSamples = 9;

struct LamrResult {
    double value = 1.0;
    std::array<std::pair<double, double>, kLamrSamples> samples{};  // (fppi, miss rate)
};

/// FPPI reference points 10^(-2 + k/4), k = 0..8.
std::array<double, kLamrSamples> lamr_reference_points();

/// Miss rate of the curve at a reference FPPI (last point with fppi <= ref, else
/// the point with the lowest FPPI; 1 for an empty curve).
double miss_rate_at(const RocCurve& curve, double fppi);

LamrResult lamr(const RocCurve& curve);

}  // namespace spdet
