#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "spdet/errors.hpp"
#include "spdet/pooling.hpp"

using namespace spdet;

namespace {
RasterImage lowlevel_of(const RasterImage& rgb) { return lowlevel9(luminance(rgb_to_luv(rgb))); }
}

TEST_CASE("cov integrals on constant planes") {
    RasterImage ll(6, 5, 9);
    for (int p = 0; p < 9; ++p)
        for (auto& v : ll.plane(p)) v = 0.25f * (p + 1);
    const CovIntegrals ci(ll);
    const Rect r{1, 1, 4, 3};
    for (int i = 2; i < 9; ++i)
        for (int j = 2; j < 9; ++j)
            CHECK(ci.product_sum(i, j, r) == doctest::Approx(12 * 0.25 * (i + 1) * 0.25 * (j + 1)).epsilon(1e-12));
    const auto s = patch_stats(ci, r);
    for (double v : s.var) CHECK(v == 0.0);
    for (double c : s.corr) CHECK(c == 0.0);
    CHECK_THROWS_AS(patch_stats(ci, {3, 3, 4, 4}), BoundsError);
}

TEST_CASE("patch stats: single pixel, identical planes, two-pass oracle") {
    std::mt19937_64 rng(21);
    const auto ll = lowlevel_of(oracle::textured_rgb(40, 40, rng));
    const CovIntegrals ci(ll);
    for (double v : patch_stats(ci, {5, 7, 1, 1}).var) CHECK(v == 0.0);

    RasterImage twin = ll;
    auto src = twin.plane(kAbsIx);
    auto dst = twin.plane(kMagnitude);
    std::copy(src.begin(), src.end(), dst.begin());
    const auto t = patch_stats(CovIntegrals(twin), {3, 3, 8, 8});
    REQUIRE(t.var[kAbsIx] > 0.0);
    CHECK(t.correlation(kAbsIx, kMagnitude) == doctest::Approx(1.0).epsilon(1e-9));

    for (int k = 0; k < 30; ++k) {
        std::uniform_int_distribution<int> pos(0, 32);
        const Rect r{pos(rng), pos(rng), 8, 8};
        const auto got = patch_stats(ci, r);
        const auto want = oracle::direct_stats(ll, r);
        for (int i = 0; i < 9; ++i) {
            CHECK(std::abs(got.var[i] - want.var[i]) <= 1e-5);
            for (int j = i + 1; j < 9; ++j) CHECK(std::abs(got.correlation(i, j) - want.corr[i][j]) <= 1e-5);
        }
    }
}

TEST_CASE("large rectangles stay exact") {
    std::mt19937_64 rng(22);
    const auto ll = lowlevel_of(oracle::textured_rgb(90, 80, rng));
    const CovIntegrals ci(ll);
    const Rect r{0, 0, 90, 80};
    const auto got = patch_stats(ci, r);
    const auto want = oracle::direct_stats(ll, r);
    for (int i = 0; i < 9; ++i) {
        CHECK(std::abs(got.var[i] - want.var[i]) <= 1e-6 * std::max(1.0, want.var[i]));
        for (int j = i + 1; j < 9; ++j) CHECK(std::abs(got.correlation(i, j) - want.corr[i][j]) <= 1e-6);
    }
    // The blockwise path and a single lookup agree where both apply.
    const Rect small{10, 10, 40, 40};
    double direct = 0.0;
    for (int y = 10; y < 50; ++y)
        for (int x = 10; x < 50; ++x) direct += static_cast<double>(ll.at(kPosX, x, y)) * ll.at(kPosY, x, y);
    CHECK(ci.product_sum(kPosX, kPosY, small) == direct);
}

TEST_CASE("cov vector layout") {
    PatchStats s;
    for (int i = 0; i < 9; ++i) s.var[i] = i;
    for (int k = 0; k < 36; ++k) s.corr[k] = k / 100.0;
    const auto v = cov_vector(s);
    CHECK(v[0] == 2.0f);
    CHECK(v[6] == 8.0f);
    CHECK(v[7] == doctest::Approx(0.01f));  // (x, |Ix|); (x, y) is skipped
    CHECK(v[41] == doctest::Approx(0.35f));
    CHECK(cov_pair_index(0, 0) == 0);
    CHECK(cov_pair_index(8, 8) == 44);
    CHECK(cov_pair_index(3, 1) == cov_pair_index(1, 3));
}

TEST_CASE("sp-Cov pooled planes match brute force on a small image") {
    std::mt19937_64 rng(23);
    const auto img = oracle::textured_rgb(40, 36, rng);
    const auto stack = sp_cov_stack(img);
    CHECK(stack.count() == 136);
    const auto ll = lowlevel_of(img);
    const int sizes[] = {8, 16, 32};
    for (int s = 0; s < 3; ++s) {
        const auto want = oracle::brute_pooled_cov(ll, sizes[s]);
        for (int k = 0; k < 42; ++k) {
            const auto plane = stack.plane(s * 42 + k);
            for (std::size_t c = 0; c < plane.size(); ++c) CHECK(std::abs(plane[c] - want[c][k]) <= 1e-5);
        }
    }
    // Raw statistic planes are the 4x4 means of the low-level planes.
    CHECK(stack.names()[126] == "|Ix|");
    CHECK(stack.names()[133] == "L");
}

TEST_CASE("sp-Cov on constant image and undersized image") {
    const auto flat = sp_cov_stack(RasterImage(40, 40, 3, 90.0f));
    for (int c = 0; c < 126; ++c)
        for (float v : flat.plane(c)) CHECK(v == 0.0f);
    std::mt19937_64 rng(24);
    const auto small = sp_cov_stack(oracle::textured_rgb(20, 24, rng));
    CHECK(small.count() == 136);
    CHECK(!small.warnings().empty());
    for (int c = 84; c < 126; ++c)
        for (float v : small.plane(c)) CHECK(v == 0.0f);
}

TEST_CASE("sp-LBP and LBP histograms") {
    const auto flat = sp_lbp_stack(RasterImage(16, 16, 1, 0.5f));
    CHECK(flat.count() == 116);
    const int ff = uniform_mapping()[0xFF];
    // Interior cell: all 16 pixels of every 4x4 patch carry the 0xFF code.
    CHECK(flat.at(ff, 1, 1) == 16.0f);
    CHECK(flat.at(58 + ff, 1, 1) == 16.0f);
    for (int c = 0; c < 58; ++c)
        if (c != ff) CHECK(flat.at(c, 1, 1) == 0.0f);

    std::mt19937_64 rng(25);
    auto lum = oracle::random_plane(24, 20, rng, 0.0f, 3.0f);
    for (auto& v : lum.data()) v = std::floor(v);
    const auto s = sp_lbp_stack(lum);
    const auto want = oracle::brute_sp_lbp(lum);
    const auto codes = oracle::lbp_loop(lum);
    for (int c = 0; c < 58; ++c) {
        for (int cy = 0; cy < s.grid_h(); ++cy)
            for (int cx = 0; cx < s.grid_w(); ++cx) {
                CHECK(s.at(c, cx, cy) == static_cast<float>(want[c][cy * s.grid_w() + cx]));
                int n = 0;
                for (int y = 4 * cy; y < 4 * cy + 4; ++y)
                    for (int x = 4 * cx; x < 4 * cx + 4; ++x) n += codes[y * 24 + x] == c;
                CHECK(s.at(58 + c, cx, cy) == static_cast<float>(n));
            }
    }
}

TEST_CASE("assemble configurations") {
    std::mt19937_64 rng(26);
    const auto img = oracle::textured_rgb(64, 64, rng);
    CHECK(assemble(img, "M+O+LUV+LBP").count() == 68);
    CHECK(assemble(img, "sp-Cov+LUV").count() == 136);
    CHECK(assemble(img, "sp-Cov+M+O+LUV").count() == 143);
    CHECK(assemble(img, "sp-Cov+sp-LBP+M+O+LUV").count() == 259);
    CHECK_THROWS_AS(assemble(img, "HOG"), InvalidInput);
    for (auto cfg : {ChannelConfig::AcfLbp, ChannelConfig::SpCovLuv, ChannelConfig::SpCovAcf,
                     ChannelConfig::SpCovSpLbpAcf}) {
        CHECK(parse_channel_config(channel_config_name(cfg)) == cfg);
    }
}

TEST_CASE("window channels equal the full-image cells") {
    std::mt19937_64 rng(27);
    const auto img = oracle::textured_rgb(120, 176, rng);
    for (auto cfg : {ChannelConfig::AcfLbp, ChannelConfig::SpCovSpLbpAcf}) {
        const auto full = assemble(img, cfg);
        for (auto [x, y] : {std::pair{0, 0}, {4, 8}, {28, 20}, {56, 48}}) {
            const auto w = window_channels(img, x, y, 64, 128, cfg);
            CHECK(w == full.window_features(x / 4, y / 4, 16, 32));
        }
    }
    CHECK_THROWS_AS(window_channels(img, 60, 0, 64, 128, ChannelConfig::AcfLbp), BoundsError);
    CHECK_THROWS_AS(window_channels(img, 0, 0, 63, 128, ChannelConfig::AcfLbp), InvalidInput);
}
