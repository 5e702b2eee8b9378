#include <doctest.h>

#include <cmath>
#include <random>

#include "spdet/errors.hpp"
#include "spdet/evalkit.hpp"

using namespace spdet;

namespace {

FrameMatch frame_of(std::initializer_list<std::pair<double, bool>> dets, int gt) {
    FrameMatch f;
    for (const auto& [s, tp] : dets) {
        f.scores.push_back(s);
        f.outcome.push_back(tp ? Outcome::TruePositive : Outcome::FalsePositive);
        f.matched_gt.push_back(-1);
        (tp ? f.true_positives : f.false_positives)++;
    }
    f.gt_count = gt;
    f.missed = gt - f.true_positives;
    return f;
}

}  // namespace

TEST_CASE("box overlaps") {
    const Box a{0, 0, 10, 10}, b{5, 0, 10, 10}, c{20, 20, 5, 5}, inner{2, 2, 4, 4};
    CHECK(intersection_area(a, b) == 50.0);
    CHECK(iou(a, b) == doctest::Approx(50.0 / 150.0));
    CHECK(iou(a, c) == 0.0);
    CHECK(iou(a, a) == 1.0);
    CHECK(min_area_overlap(a, inner) == 1.0);
    CHECK(iou(a, inner) == doctest::Approx(0.16));
    // Touching edges do not intersect.
    CHECK(intersection_area(a, Box{10, 0, 5, 5}) == 0.0);
    CHECK(iou(Box{}, Box{}) == 0.0);
}

TEST_CASE("reasonable subset") {
    std::vector<GtBox> gt(5);
    gt[0].box = {0, 0, 20, 50};
    gt[1].box = {0, 0, 20, 49};
    gt[2].box = {0, 0, 20, 80};
    gt[2].visible = 0.65;
    gt[3].box = {0, 0, 20, 80};
    gt[3].visible = 0.64;
    gt[4].box = {0, 0, 20, 80};
    gt[4].label = "people";
    const auto r = filter_reasonable(gt);
    REQUIRE(r.size() == 5);
    CHECK(!r[0].ignore);
    CHECK(r[1].ignore);
    CHECK(!r[2].ignore);
    CHECK(r[3].ignore);
    CHECK(r[4].ignore);
    // An explicit ignore flag from the input is recomputed.
    gt[0].ignore = true;
    CHECK(!filter_reasonable(gt)[0].ignore);
}

TEST_CASE("frame matching") {
    std::vector<GtBox> gt(2);
    gt[0].box = {0, 0, 40, 80};
    gt[1].box = {100, 0, 40, 80};
    SUBCASE("higher score claims the ground truth") {
        const std::vector<ScoredBox> dets{{{2, 0, 40, 80}, 0.5}, {{0, 0, 40, 80}, 0.9}};
        const auto m = match_frame(dets, gt);
        CHECK(m.outcome[1] == Outcome::TruePositive);
        CHECK(m.outcome[0] == Outcome::FalsePositive);
        CHECK(m.matched_gt[1] == 0);
        CHECK(m.true_positives == 1);
        CHECK(m.false_positives == 1);
        CHECK(m.missed == 1);
        CHECK(m.gt_detected == std::vector<bool>{true, false});
    }
    SUBCASE("iou threshold is inclusive") {
        // Half of the ground truth, inside it: iou exactly 0.5.
        const std::vector<ScoredBox> dets{{{0, 0, 20, 80}, 1.0}};
        CHECK(match_frame(dets, gt).true_positives == 1);
        const std::vector<ScoredBox> off{{{0, 0, 19, 80}, 1.0}};
        CHECK(match_frame(off, gt).true_positives == 0);
    }
    SUBCASE("ignored ground truth absorbs detections") {
        gt[1].ignore = true;
        const std::vector<ScoredBox> dets{{{100, 0, 40, 80}, 0.9}, {{101, 0, 40, 80}, 0.8}, {{300, 0, 40, 80}, 0.7}};
        const auto m = match_frame(dets, gt);
        CHECK(m.outcome[0] == Outcome::Ignored);
        CHECK(m.outcome[1] == Outcome::Ignored);
        CHECK(m.outcome[2] == Outcome::FalsePositive);
        CHECK(m.gt_count == 1);
        CHECK(m.missed == 1);
        CHECK(m.ignored == 2);
    }
    SUBCASE("a free ground truth wins over an ignored one") {
        gt[1].ignore = true;
        gt[1].box = {0, 0, 40, 80};
        const std::vector<ScoredBox> dets{{{0, 0, 40, 80}, 0.9}};
        CHECK(match_frame(dets, gt).outcome[0] == Outcome::TruePositive);
    }
    SUBCASE("no detections") {
        const auto m = match_frame(std::vector<ScoredBox>{}, gt);
        CHECK(m.missed == 2);
        CHECK(m.outcome.empty());
    }
}

TEST_CASE("roc sweep") {
    const std::vector<FrameMatch> frames{frame_of({{0.9, true}, {0.5, false}}, 2), frame_of({{0.7, true}, {0.5, true}}, 2)};
    const auto c = roc(frames);
    REQUIRE(c.points.size() == 3);
    CHECK(c.images == 2);
    CHECK(c.gt_count == 4);
    CHECK(c.points[0].threshold == 0.9);
    CHECK(c.points[0].miss_rate == doctest::Approx(0.75));
    CHECK(c.points[0].fppi == 0.0);
    CHECK(c.points[2].threshold == 0.5);  // tied scores form one point
    CHECK(c.points[2].fppi == doctest::Approx(0.5));
    CHECK(c.points[2].miss_rate == doctest::Approx(0.25));
    CHECK_THROWS_AS(roc(std::vector<FrameMatch>{}), InvalidInput);
    CHECK_THROWS_AS(roc(std::vector<FrameMatch>{frame_of({{1.0, false}}, 0)}), InvalidInput);

    const std::vector<double> pos{3.0, -INFINITY}, neg{2.0, 4.0};
    const auto s = roc_from_scores(pos, neg, 4);
    CHECK(s.gt_count == 2);
    REQUIRE(s.points.size() == 3);
    CHECK(s.points.back().miss_rate == doctest::Approx(0.5));
    CHECK(s.points.back().fppi == doctest::Approx(0.5));
}

TEST_CASE("miss rate lookup") {
    RocCurve c;
    c.images = 1;
    c.gt_count = 10;
    CHECK(miss_rate_at(c, 1.0) == 1.0);
    c.points = {{3, 0.5, 0.6}, {2, 0.5, 0.5}, {1, 2.0, 0.2}};
    CHECK(miss_rate_at(c, 0.01) == doctest::Approx(0.5));  // lowest FPPI, last such point
    CHECK(miss_rate_at(c, 1.0) == doctest::Approx(0.5));
    CHECK(miss_rate_at(c, 2.0) == doctest::Approx(0.2));
}

TEST_CASE("log-average miss rate") {
    const auto ref = lamr_reference_points();
    CHECK(ref[0] == doctest::Approx(0.01));
    CHECK(ref[4] == doctest::Approx(0.1));
    CHECK(ref[8] == doctest::Approx(1.0));

    RocCurve c;
    c.images = 100;
    c.gt_count = 10;
    c.points = {{1.0, 0.0, 0.5}};
    CHECK(lamr(c).value == doctest::Approx(0.5));

    // Miss rate 0.5 below 0.1 FPPI, then 0.1: (0.5^4 * 0.1^5)^(1/9).
    c.points = {{2.0, 0.0, 0.5}, {1.0, 0.1, 0.1}};
    CHECK(lamr(c).value == doctest::Approx(std::pow(std::pow(0.5, 4) * std::pow(0.1, 5), 1.0 / 9.0)));

    // A perfect detector is clamped at 1 / (gt + 1).
    c.points = {{1.0, 0.0, 0.0}};
    CHECK(lamr(c).value == doctest::Approx(1.0 / 11.0));

    c.points.clear();
    CHECK(lamr(c).value == 1.0);
    c.gt_count = 0;
    CHECK_THROWS_AS(lamr(c), InvalidInput);
}

TEST_CASE("lamr is monotone in added true positives") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> pos(20), neg(40);
        for (auto& v : pos) v = u(rng);
        for (auto& v : neg) v = u(rng);
        const double before = lamr(roc_from_scores(pos, neg, 10)).value;
        pos[trial % 20] += 2.0;
        CHECK(lamr(roc_from_scores(pos, neg, 10)).value <= before + 1e-12);
    }
}
