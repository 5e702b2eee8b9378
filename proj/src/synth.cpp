#include "spdet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "spdet/errors.hpp"
#include "spdet/io.hpp"

namespace spdet {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

void fill_rect(RasterImage& img, int x0, int y0, int w, int h, const float (&c)[3], std::mt19937_64& rng) {
    for (int y = std::max(0, y0); y < std::min(img.height(), y0 + h); ++y) {
        for (int x = std::max(0, x0); x < std::min(img.width(), x0 + w); ++x) {
            for (int p = 0; p < 3; ++p) img.at(p, x, y) = c[p] + static_cast<float>(uniform(rng, -10.0, 10.0));
        }
    }
}

}  // namespace

RasterImage synth_background(int w, int h, std::mt19937_64& rng) {
    RasterImage img(w, h, 3);
    float base[3];
    for (float& b : base) b = static_cast<float>(uniform(rng, 40.0, 190.0));
    constexpr int kGrid = 24;
    const int gw = w / kGrid + 2, gh = h / kGrid + 2;
    std::vector<float> nodes(static_cast<std::size_t>(gw) * gh * 3);
    for (float& v : nodes) v = static_cast<float>(uniform(rng, -45.0, 45.0));
    for (int y = 0; y < h; ++y) {
        const double fy = static_cast<double>(y) / kGrid;
        const int iy = static_cast<int>(fy);
        const double ty = fy - iy;
        for (int x = 0; x < w; ++x) {
            const double fx = static_cast<double>(x) / kGrid;
            const int ix = static_cast<int>(fx);
            const double tx = fx - ix;
            for (int p = 0; p < 3; ++p) {
                auto n = [&](int gx, int gy) { return nodes[(static_cast<std::size_t>(gy) * gw + gx) * 3 + p]; };
                const double v = (1 - ty) * ((1 - tx) * n(ix, iy) + tx * n(ix + 1, iy)) +
                                 ty * ((1 - tx) * n(ix, iy + 1) + tx * n(ix + 1, iy + 1));
                img.at(p, x, y) = static_cast<float>(base[p] + v + uniform(rng, -30.0, 30.0));
            }
        }
    }
    // 6..14 distractors per 320x256, scaled to the area so crops match full images.
    const double expected = uniform(rng, 6.0, 14.0) * w * h / (320.0 * 256.0);
    const int distractors = static_cast<int>(expected) + (uniform(rng, 0.0, 1.0) < expected - std::floor(expected) ? 1 : 0);
    for (int k = 0; k < distractors; ++k) {
        int dw, dh;
        const float c[3] = {static_cast<float>(uniform(rng, 90.0, 255.0)), static_cast<float>(uniform(rng, 90.0, 255.0)),
                            static_cast<float>(uniform(rng, 90.0, 255.0))};
        const int kind = uniform_int(rng, 0, 5);
        if (kind >= 3) {
            // figure fragments: a lone head, a torso bar or a pair of legs
            const double sc = uniform(rng, 0.8, 1.6);
            const int cx = uniform_int(rng, 0, w - 1), cy = uniform_int(rng, 0, h - 1);
            for (int y = std::max(0, cy - static_cast<int>(50 * sc)); y < std::min(h, cy + static_cast<int>(50 * sc)); ++y) {
                for (int x = std::max(0, cx - static_cast<int>(20 * sc)); x < std::min(w, cx + static_cast<int>(20 * sc)); ++x) {
                    const double u = (x - cx) / sc, v = (y - cy) / sc;
                    bool in = false;
                    if (kind == 3) in = u * u + v * v <= 81.0;
                    if (kind == 4) in = std::fabs(u) < 10.0 && std::fabs(v) < 24.0;
                    if (kind == 5) in = std::fabs(v) < 17.0 && std::fabs(u) >= 2.0 && std::fabs(u) < 9.5;
                    if (in) {
                        for (int p = 0; p < 3; ++p) img.at(p, x, y) = c[p] + static_cast<float>(uniform(rng, -10.0, 10.0));
                    }
                }
            }
            continue;
        }
        switch (kind) {
            case 0:  // horizontal bar
                dw = uniform_int(rng, 20, 80);
                dh = uniform_int(rng, 6, 16);
                break;
            case 1:  // blob
                dw = dh = uniform_int(rng, 8, 30);
                break;
            default:  // short vertical bar
                dw = uniform_int(rng, 6, 14);
                dh = uniform_int(rng, 20, 50);
                break;
        }
        const int x0 = uniform_int(rng, -dw / 2, w - dw / 2);
        const int y0 = uniform_int(rng, -dh / 2, h - dh / 2);
        fill_rect(img, x0, y0, dw, dh, c, rng);
    }
    for (float& v : img.data()) v = std::clamp(v, 0.0f, 255.0f);
    return img;
}

namespace {

struct Figure {
    double head_r, head_y, torso_w, torso_top, torso_bottom, leg_w, leg_gap, leg_bottom, dx, dy, size;
    bool arms;
};

Figure random_figure(std::mt19937_64& rng) {
    Figure f;
    f.head_r = uniform(rng, 7.0, 10.0);
    f.head_y = uniform(rng, 18.0, 24.0);
    f.torso_w = uniform(rng, 16.0, 24.0);
    f.torso_top = f.head_y + f.head_r + uniform(rng, 1.0, 4.0);
    f.torso_bottom = uniform(rng, 74.0, 84.0);
    f.leg_w = uniform(rng, 6.0, 9.0);
    f.leg_gap = uniform(rng, 2.0, 6.0);
    f.leg_bottom = uniform(rng, 108.0, 118.0);
    f.dx = uniform(rng, -6.0, 6.0);
    f.dy = uniform(rng, -5.0, 5.0);
    f.size = uniform(rng, 0.88, 1.12);
    f.arms = uniform(rng, 0.0, 1.0) < 0.5;
    return f;
}

bool inside(const Figure& f, double u, double v) {
    u = (u - 32.0 - f.dx) / f.size;
    v = (v - 64.0 - f.dy) / f.size + 64.0;
    const double hy = v - f.head_y;
    if (u * u + hy * hy <= f.head_r * f.head_r) return true;
    const double half = f.torso_w / 2;
    if (std::fabs(u) < half && v >= f.torso_top && v < f.torso_bottom) return true;
    if (f.arms && std::fabs(u) >= half && std::fabs(u) < half + 4.0 && v >= f.torso_top + 2 && v < f.torso_bottom - 8) {
        return true;
    }
    if (v >= f.torso_bottom && v < f.leg_bottom) {
        const double a = std::fabs(u);
        if (a >= f.leg_gap / 2 && a < f.leg_gap / 2 + f.leg_w) return true;
    }
    return false;
}

}  // namespace

void draw_pedestrian(RasterImage& img, const Box& b, std::mt19937_64& rng) {
    const double s = b.h / 128.0;
    const Figure fig = random_figure(rng);
    const double tint = uniform(rng, -25.0, 0.0);
    // Some figures are faint: translucent over the background.
    const double strength = uniform(rng, 0.0, 1.0) < 0.2 ? uniform(rng, 0.25, 0.6) : uniform(rng, 0.6, 1.0);
    float c[3];
    for (float& v : c) v = static_cast<float>(uniform(rng, 130.0, 250.0) + tint);
    const int x0 = std::max(0, static_cast<int>(std::floor(b.x)));
    const int y0 = std::max(0, static_cast<int>(std::floor(b.y)));
    const int x1 = std::min(img.width(), static_cast<int>(std::ceil(b.x + b.w)));
    const int y1 = std::min(img.height(), static_cast<int>(std::ceil(b.y + b.h)));
    constexpr int kSub = 4;
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            int hits = 0;
            for (int sy = 0; sy < kSub; ++sy) {
                for (int sx = 0; sx < kSub; ++sx) {
                    const double u = (x + (sx + 0.5) / kSub - b.x) / s, v = (y + (sy + 0.5) / kSub - b.y) / s;
                    hits += inside(fig, u, v) ? 1 : 0;
                }
            }
            if (hits == 0) continue;
            const float a = static_cast<float>(strength * hits / (kSub * kSub));
            for (int p = 0; p < 3; ++p) {
                const float fg = static_cast<float>(c[p] + uniform(rng, -10.0, 10.0));
                img.at(p, x, y) = std::clamp(a * fg + (1.0f - a) * img.at(p, x, y), 0.0f, 255.0f);
            }
        }
    }
    if (uniform(rng, 0.0, 1.0) < 0.3) {
        // partial occluder across the figure
        const int ow = static_cast<int>(b.w * uniform(rng, 0.5, 1.2));
        const int oh = static_cast<int>(s * uniform(rng, 10.0, 30.0));
        const int ox = static_cast<int>(b.x + uniform(rng, -0.2, 0.7) * b.w);
        const int oy = static_cast<int>(b.y + uniform(rng, 0.2, 0.9) * b.h);
        float oc[3];
        for (float& v : oc) v = static_cast<float>(uniform(rng, 30.0, 200.0));
        fill_rect(img, ox, oy, ow, oh, oc, rng);
    }
}

SynthDataset make_synth_dataset(const SynthSpec& spec) {
    if (spec.window_w * 2 != spec.window_h) throw InvalidInput("synth: window must have a 1:2 aspect");
    const double max_h = spec.window_h * spec.max_scale;
    if (spec.image_h < max_h || spec.image_w < spec.window_w * spec.max_scale) {
        throw InvalidInput("synth: test image smaller than the largest figure");
    }
    SynthDataset data;
    std::mt19937_64 rng(spec.seed);
    const int m = spec.crop_margin;
    for (int i = 0; i < spec.train_positives; ++i) {
        // Drawn at a random scale and resampled, like a cropped and normalised annotation.
        const double sc = uniform(rng, spec.min_scale, spec.max_scale);
        const int cw = static_cast<int>(std::round((spec.window_w + 2 * m) * sc));
        const int ch = static_cast<int>(std::round((spec.window_h + 2 * m) * sc));
        RasterImage big = synth_background(cw, ch, rng);
        draw_pedestrian(big, {m * sc, m * sc, spec.window_w * sc, spec.window_h * sc}, rng);
        data.positives.push_back(resample(big, spec.window_w + 2 * m, spec.window_h + 2 * m));
    }
    for (int i = 0; i < spec.train_negatives; ++i) {
        data.negatives.push_back(synth_background(spec.image_w, spec.image_h, rng));
    }
    for (int i = 0; i < spec.test_images; ++i) {
        SynthImage t;
        t.image = synth_background(spec.image_w, spec.image_h, rng);
        const int people = uniform_int(rng, 0, spec.max_people);
        for (int k = 0, tries = 0; k < people && tries < 50; ++tries) {
            const double sc = uniform(rng, spec.min_scale, spec.max_scale);
            const double bw = spec.window_w * sc, bh = spec.window_h * sc;
            const Box b{std::floor(uniform(rng, 0.0, spec.image_w - bw)), std::floor(uniform(rng, 0.0, spec.image_h - bh)),
                        bw, bh};
            const Box padded{b.x - 8, b.y - 8, b.w + 16, b.h + 16};
            bool clear = true;
            for (const auto& g : t.gt) clear = clear && intersection_area(padded, g.box) == 0.0;
            if (!clear) continue;
            draw_pedestrian(t.image, b, rng);
            GtBox g;
            g.box = b;
            t.gt.push_back(g);
            ++k;
        }
        data.test.push_back(std::move(t));
    }
    // Same samples as after a round trip through 8-bit files.
    auto round_all = [](RasterImage& im) {
        for (float& v : im.data()) v = std::round(v);
    };
    for (auto& im : data.positives) round_all(im);
    for (auto& im : data.negatives) round_all(im);
    for (auto& t : data.test) round_all(t.image);
    return data;
}

void write_synth_dataset(const std::filesystem::path& root, const SynthDataset& data) {
    namespace fs = std::filesystem;
    const fs::path pos = root / "train" / "pos", neg = root / "train" / "neg";
    const fs::path img = root / "test" / "images", ann = root / "test" / "annotations";
    for (const auto& d : {pos, neg, img, ann}) fs::create_directories(d);
    char name[32];
    for (std::size_t i = 0; i < data.positives.size(); ++i) {
        std::snprintf(name, sizeof name, "pos%05zu.ppm", i);
        write_pnm(pos / name, data.positives[i]);
    }
    for (std::size_t i = 0; i < data.negatives.size(); ++i) {
        std::snprintf(name, sizeof name, "neg%05zu.ppm", i);
        write_pnm(neg / name, data.negatives[i]);
    }
    for (std::size_t i = 0; i < data.test.size(); ++i) {
        std::snprintf(name, sizeof name, "test%05zu", i);
        write_pnm(img / (std::string(name) + ".ppm"), data.test[i].image);
        write_annotations(ann / (std::string(name) + ".txt"), data.test[i].gt);
    }
}

}  // namespace spdet
