#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "spdet/detect.hpp"
#include "spdet/errors.hpp"
#include "spdet/pooling.hpp"

using namespace spdet;

namespace {

// A model over an AcfLbp 16x32 window with quantizer bounds fitted to [0, 1].
BoostedModel small_model(std::mt19937_64& rng, int trees) {
    const std::size_t dim = static_cast<std::size_t>(channel_count(ChannelConfig::AcfLbp)) * 4 * 8;
    auto m = oracle::random_model(dim, trees, 2, rng);
    m.window_w = 16;
    m.window_h = 32;
    m.channels = ChannelConfig::AcfLbp;
    return m;
}

}  // namespace

TEST_CASE("pyramid factors") {
    PyramidSpec one{8, 1.0};
    auto f = pyramid_factors(64, 128, 64, 128, one);
    REQUIRE(f.size() == 1);
    CHECK(f[0] == 1.0);
    CHECK(pyramid_factors(63, 128, 64, 128, one).empty());

    f = pyramid_factors(256, 256, 64, 128, PyramidSpec{8, 2.0});
    REQUIRE(f.size() > 2);
    CHECK(f[0] == 2.0);
    for (std::size_t k = 1; k < f.size(); ++k) CHECK(f[k - 1] / f[k] == doctest::Approx(std::exp2(1.0 / 8)));
    // Last level still holds the window; the next one would not.
    CHECK(std::floor(256 * f.back()) >= 128);
    CHECK(std::floor(256 * f.back() * std::exp2(-1.0 / 8)) < 128);
    CHECK_THROWS_AS(pyramid_factors(64, 64, 8, 8, PyramidSpec{0, 1.0}), InvalidInput);

    const RasterImage img(100, 80, 3);
    const auto levels = build_pyramid(img, 16, 32, PyramidSpec{4, 1.0});
    REQUIRE(!levels.empty());
    for (const auto& lv : levels) {
        CHECK(lv.image.width() == static_cast<int>(std::floor(100 * lv.factor + 1e-9)));
        const Box b{10, 20, 30, 40};
        const Box back = level_to_image(image_to_level(b, lv), lv);
        CHECK(back.x == doctest::Approx(b.x));
        CHECK(back.h == doctest::Approx(b.h));
    }
}

TEST_CASE("window offsets") {
    const auto off = window_offsets(2, 10, 50, 3, 2);
    REQUIRE(off.size() == 12);
    CHECK(off[0] == 0);
    CHECK(off[3] == 10);
    CHECK(off[6] == 50);
    CHECK(off[11] == 50 + 10 + 2);
}

TEST_CASE("scan window count and crop oracle") {
    std::mt19937_64 rng(61);
    auto model = small_model(rng, 16);
    model.disable_cascade();
    const auto img = oracle::textured_rgb(16, 32, rng);
    auto dets = scan(assemble(img, model.channels), model);
    CHECK(dets.size() == 1);

    const auto big = oracle::textured_rgb(36, 52, rng);  // grid 9x13: 6 x 6 windows
    const auto stack = assemble(big, model.channels);
    dets = scan(stack, model);
    CHECK(dets.size() == 36);
    ScanOptions stride2;
    stride2.stride_cells = 2;
    CHECK(scan(stack, model, nullptr, stride2).size() == 9);

    for (const auto& d : dets) {
        const int cx = static_cast<int>(d.box.x) / 4, cy = static_cast<int>(d.box.y) / 4;
        CHECK(d.box.w == 16);
        CHECK(d.box.h == 32);
        const auto f = stack.window_features(cx, cy, 4, 8);
        CHECK(d.score == doctest::Approx(score_raw_window(model, f).score).epsilon(1e-12));
    }

    // Calibrated scores replace the boosted ones.
    PaucModel pm;
    pm.w.assign(model.trees.size(), 0.0);
    pm.w[0] = 2.0;
    for (const auto& d : scan(stack, model, &pm)) CHECK(std::abs(d.score) == 2.0);

    ScanOptions bad;
    bad.stride_cells = 0;
    CHECK_THROWS_AS(scan(stack, model, nullptr, bad), InvalidInput);
    pm.w.pop_back();
    CHECK_THROWS_AS(scan(stack, model, &pm), InvalidInput);
    CHECK_THROWS_AS(scan(assemble(big, ChannelConfig::SpCovAcf), model), InvalidInput);
    CHECK(scan(assemble(oracle::textured_rgb(12, 32, rng), model.channels), model).empty());
}

TEST_CASE("scan respects the cascade") {
    std::mt19937_64 rng(62);
    auto model = small_model(rng, 32);
    model.set_cascade(0.0);  // reject on any negative partial score
    const auto stack = assemble(oracle::textured_rgb(48, 64, rng), model.channels);
    for (const auto& d : scan(stack, model)) {
        const auto f = stack.window_features(static_cast<int>(d.box.x) / 4, static_cast<int>(d.box.y) / 4, 4, 8);
        CHECK(score_raw_window(model, f).passed);
    }
}

TEST_CASE("greedy suppression") {
    std::vector<Detection> d(4);
    d[0] = {{0, 0, 10, 20}, 0.5, 0};
    d[1] = {{1, 0, 10, 20}, 0.9, 0};
    d[2] = {{30, 0, 10, 20}, 0.1, 0};
    d[3] = {{2, 2, 4, 4}, 0.2, 0};  // fully inside d[1]: overlap 1 by the smaller area
    const auto kept = nms_greedy(d);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].score == 0.9);
    CHECK(kept[1].score == 0.1);
    // Exactly at the threshold survives.
    std::vector<Detection> edge{{{0, 0, 10, 10}, 1.0, 0}, {{3.5, 0, 10, 10}, 0.5, 0}};
    CHECK(nms_greedy(edge, 0.65).size() == 2);
    CHECK(nms_greedy({}).empty());

    // Against the quadratic definition on random boxes.
    std::mt19937_64 rng(63);
    std::uniform_real_distribution<double> u(0.0, 100.0), s(5.0, 30.0);
    std::vector<Detection> many(60);
    for (auto& x : many) x = {{u(rng), u(rng), s(rng), s(rng)}, u(rng), 0};
    const auto out = nms_greedy(many);
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = i + 1; j < out.size(); ++j) CHECK(min_area_overlap(out[i].box, out[j].box) <= 0.65);
    for (const auto& x : many) {
        bool kept_or_covered = false;
        for (const auto& k : out) {
            kept_or_covered |= k.box == x.box && k.score == x.score;
            kept_or_covered |= k.score >= x.score && min_area_overlap(k.box, x.box) > 0.65;
        }
        CHECK(kept_or_covered);
    }
}

TEST_CASE("detect is deterministic and maps boxes to the image") {
    std::mt19937_64 rng(64);
    auto model = small_model(rng, 24);
    model.disable_cascade();
    const auto img = oracle::textured_rgb(60, 72, rng);
    DetectOptions opts;
    opts.pyramid = {4, 1.0};
    const auto a = detect(img, model, nullptr, opts);
    const auto b = detect(img, model, nullptr, opts);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].box == b[k].box);
        CHECK(a[k].score == b[k].score);
        CHECK(a[k].box.x + a[k].box.w <= 60 + 1e-9);
        CHECK(a[k].box.y + a[k].box.h <= 72 + 1e-9);
    }
    opts.nms = false;
    const auto raw = detect(img, model, nullptr, opts);
    CHECK(raw.size() >= a.size());

    // Too small for one window: nothing, no error.
    CHECK(detect(RasterImage(8, 8, 3), model, nullptr, opts).empty());
    model.cascade.clear();
    CHECK_THROWS_AS(detect(img, model), InvalidInput);
}
