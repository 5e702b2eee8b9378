#include "spdet/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spdet/errors.hpp"

namespace spdet {

double intersection_area(const Box& a, const Box& b) {
    const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    return iw > 0.0 && ih > 0.0 ? iw * ih : 0.0;
}

double iou(const Box& a, const Box& b) {
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

double min_area_overlap(const Box& a, const Box& b) {
    const double m = std::min(a.area(), b.area());
    return m > 0.0 ? intersection_area(a, b) / m : 0.0;
}

std::vector<GtBox> filter_reasonable(std::vector<GtBox> gt) {
    for (auto& g : gt) {
        g.ignore = g.label != "person" || g.box.h < kReasonableMinHeight || g.visible < kReasonableMinVisible;
    }
    return gt;
}

FrameMatch match_frame(std::span<const ScoredBox> dets, std::span<const GtBox> gt, double iou_thresh) {
    FrameMatch out;
    out.scores.resize(dets.size());
    out.outcome.assign(dets.size(), Outcome::FalsePositive);
    out.matched_gt.assign(dets.size(), -1);
    out.gt_detected.assign(gt.size(), false);
    for (const auto& g : gt) out.gt_count += g.ignore ? 0 : 1;

    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

    for (std::size_t d : order) {
        out.scores[d] = dets[d].score;
        int best = -1;
        double best_iou = iou_thresh;
        for (std::size_t g = 0; g < gt.size(); ++g) {
            if (gt[g].ignore || out.gt_detected[g]) continue;
            const double o = iou(dets[d].box, gt[g].box);
            if (o >= best_iou && (best < 0 || o > best_iou)) {
                best = static_cast<int>(g);
                best_iou = o;
            }
        }
        if (best >= 0) {
            out.outcome[d] = Outcome::TruePositive;
            out.matched_gt[d] = best;
            out.gt_detected[best] = true;
            ++out.true_positives;
            continue;
        }
        best_iou = iou_thresh;
        for (std::size_t g = 0; g < gt.size(); ++g) {
            if (!gt[g].ignore) continue;
            const double o = iou(dets[d].box, gt[g].box);
            if (o >= best_iou && (best < 0 || o > best_iou)) {
                best = static_cast<int>(g);
                best_iou = o;
            }
        }
        if (best >= 0) {
            out.outcome[d] = Outcome::Ignored;
            out.matched_gt[d] = best;
            ++out.ignored;
        } else {
            ++out.false_positives;
        }
    }
    out.missed = out.gt_count - out.true_positives;
    return out;
}

namespace {

RocCurve sweep(std::vector<std::pair<double, bool>> scored, int images, int gt_count) {
    if (images < 1) throw InvalidInput("roc: need at least one image");
    if (gt_count < 1) throw InvalidInput("roc: no ground truth");
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    RocCurve curve;
    curve.images = images;
    curve.gt_count = gt_count;
    long tp = 0, fp = 0;
    for (std::size_t i = 0; i < scored.size();) {
        const double thr = scored[i].first;
        for (; i < scored.size() && scored[i].first == thr; ++i) (scored[i].second ? tp : fp)++;
        curve.points.push_back({thr, static_cast<double>(fp) / images,
                                1.0 - static_cast<double>(tp) / static_cast<double>(gt_count)});
    }
    return curve;
}

}  // namespace

RocCurve roc(std::span<const FrameMatch> frames) {
    if (frames.empty()) throw InvalidInput("roc: need at least one frame");
    std::vector<std::pair<double, bool>> scored;
    int gt = 0;
    for (const auto& f : frames) {
        gt += f.gt_count;
        for (std::size_t d = 0; d < f.outcome.size(); ++d) {
            if (f.outcome[d] == Outcome::Ignored) continue;
            scored.emplace_back(f.scores[d], f.outcome[d] == Outcome::TruePositive);
        }
    }
    return sweep(std::move(scored), static_cast<int>(frames.size()), gt);
}

RocCurve roc_from_scores(std::span<const double> pos_scores, std::span<const double> neg_scores, int images) {
    std::vector<std::pair<double, bool>> scored;
    for (double s : pos_scores) {
        if (std::isfinite(s)) scored.emplace_back(s, true);
    }
    for (double s : neg_scores) {
        if (std::isfinite(s)) scored.emplace_back(s, false);
    }
    return sweep(std::move(scored), images, static_cast<int>(pos_scores.size()));
}

std::array<double, kLamrSamples> lamr_reference_points() {
    std::array<double, kLamrSamples> ref{};
    for (int k = 0; k < kLamrSamples; ++k) ref[k] = std::pow(10.0, -2.0 + k / 4.0);
    return ref;
}

double miss_rate_at(const RocCurve& curve, double fppi) {
    if (curve.points.empty()) return 1.0;
    const RocPoint* hit = nullptr;
    for (const auto& p : curve.points) {
        if (p.fppi <= fppi) hit = &p;
    }
    if (hit) return hit->miss_rate;
    // Never reached: the last point at the lowest achieved FPPI.
    const double lowest = curve.points.front().fppi;
    double mr = curve.points.front().miss_rate;
    for (const auto& p : curve.points) {
        if (p.fppi == lowest) mr = p.miss_rate;
    }
    return mr;
}

LamrResult lamr(const RocCurve& curve) {
    if (curve.gt_count < 1) throw InvalidInput("lamr: no ground truth");
    LamrResult out;
    const auto ref = lamr_reference_points();
    const double floor_mr = 1.0 / (curve.gt_count + 1.0);
    double acc = 0.0;
    for (int k = 0; k < kLamrSamples; ++k) {
        const double mr = miss_rate_at(curve, ref[k]);
        out.samples[k] = {ref[k], mr};
        acc += std::log(std::max(mr, floor_mr));
    }
    out.value = std::exp(acc / kLamrSamples);
    return out;
}

}  // namespace spdet
