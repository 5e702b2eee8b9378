#include "spdet/detect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spdet/errors.hpp"
#include "spdet/parallel.hpp"

namespace spdet {

std::vector<double> pyramid_factors(int width, int height, int window_w, int window_h, const PyramidSpec& spec) {
    if (spec.scales_per_octave < 1) throw InvalidInput("pyramid: scales per octave must be positive");
    if (!(spec.max_upscale > 0.0)) throw InvalidInput("pyramid: max upscale must be positive");
    std::vector<double> out;
    for (int k = 0;; ++k) {
        const double f = spec.max_upscale * std::exp2(-static_cast<double>(k) / spec.scales_per_octave);
        const int lw = static_cast<int>(std::floor(width * f + 1e-9));
        const int lh = static_cast<int>(std::floor(height * f + 1e-9));
        if (lw < window_w || lh < window_h) break;
        out.push_back(f);
    }
    return out;
}

std::vector<PyramidLevel> build_pyramid(const RasterImage& img, int window_w, int window_h, const PyramidSpec& spec) {
    std::vector<PyramidLevel> levels;
    for (double f : pyramid_factors(img.width(), img.height(), window_w, window_h, spec)) {
        PyramidLevel lv;
        const int lw = static_cast<int>(std::floor(img.width() * f + 1e-9));
        const int lh = static_cast<int>(std::floor(img.height() * f + 1e-9));
        lv.factor = f;
        lv.sx = static_cast<double>(lw) / img.width();
        lv.sy = static_cast<double>(lh) / img.height();
        lv.image = resample(img, lw, lh);
        levels.push_back(std::move(lv));
    }
    return levels;
}

Box level_to_image(const Box& b, const PyramidLevel& level) {
    return {b.x / level.sx, b.y / level.sy, b.w / level.sx, b.h / level.sy};
}

Box image_to_level(const Box& b, const PyramidLevel& level) {
    return {b.x * level.sx, b.y * level.sy, b.w * level.sx, b.h * level.sy};
}

std::vector<std::uint32_t> window_offsets(int channels, int grid_w, std::size_t plane_size, int window_gw,
                                          int window_gh) {
    std::vector<std::uint32_t> off;
    off.reserve(static_cast<std::size_t>(channels) * window_gw * window_gh);
    for (int c = 0; c < channels; ++c) {
        for (int y = 0; y < window_gh; ++y) {
            for (int x = 0; x < window_gw; ++x) {
                off.push_back(static_cast<std::uint32_t>(c * plane_size + static_cast<std::size_t>(y) * grid_w + x));
            }
        }
    }
    return off;
}

std::vector<Detection> scan(const ChannelStack& stack, const BoostedModel& model, const PaucModel* pauc,
                            const ScanOptions& opts) {
    if (opts.stride_cells < 1) throw InvalidInput("scan: stride must be positive");
    const int gw = model.grid_w(), gh = model.grid_h();
    std::vector<Detection> out;
    if (stack.grid_w() < gw || stack.grid_h() < gh) return out;
    const std::size_t dim = static_cast<std::size_t>(stack.count()) * gw * gh;
    if (dim != model.dim()) throw InvalidInput("scan: channel stack does not match the model");
    if (pauc && pauc->w.size() != model.trees.size()) throw InvalidInput("scan: pAUC weights do not match the model");

    const auto off = window_offsets(stack.count(), stack.grid_w(), stack.plane_size(), gw, gh);
    const float* data = stack.data().data();
    const std::size_t T = model.trees.size();
    std::vector<std::int8_t> h(T);

    for (int cy = 0; cy + gh <= stack.grid_h(); cy += opts.stride_cells) {
        for (int cx = 0; cx + gw <= stack.grid_w(); cx += opts.stride_cells) {
            const float* base = data + static_cast<std::size_t>(cy) * stack.grid_w() + cx;
            auto bin_of = [&](std::uint32_t f) { return model.quant.bin(f, base[off[f]]); };
            double score = 0.0;
            bool passed = true;
            for (std::size_t t = 0; t < T; ++t) {
                h[t] = model.trees[t].predict(bin_of);
                score += model.coefficient(t) * h[t];
                if (score < model.cascade[t]) {
                    passed = false;
                    break;
                }
            }
            if (!passed || score < opts.min_score) continue;
            if (pauc) score = calibrate_score(*pauc, h);
            out.push_back({{cx * 4.0, cy * 4.0, static_cast<double>(model.window_w), static_cast<double>(model.window_h)},
                           score,
                           0});
        }
    }
    return out;
}

std::vector<Detection> nms_greedy(std::vector<Detection> dets, double overlap) {
    std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) { return a.score > b.score; });
    std::vector<Detection> kept;
    for (const auto& d : dets) {
        bool keep = true;
        for (const auto& k : kept) {
            if (min_area_overlap(d.box, k.box) > overlap) {
                keep = false;
                break;
            }
        }
        if (keep) kept.push_back(d);
    }
    return kept;
}

std::vector<Detection> detect(const RasterImage& rgb, const BoostedModel& model, const PaucModel* pauc,
                              const DetectOptions& opts) {
    if (model.trees.empty() || model.cascade.size() != model.trees.size()) throw InvalidInput("detect: invalid model");
    const auto factors = pyramid_factors(rgb.width(), rgb.height(), model.window_w, model.window_h, opts.pyramid);
    std::vector<std::vector<Detection>> per_level(factors.size());
    parallel_for(factors.size(), [&](std::size_t k) {
        PyramidLevel lv;
        const int lw = static_cast<int>(std::floor(rgb.width() * factors[k] + 1e-9));
        const int lh = static_cast<int>(std::floor(rgb.height() * factors[k] + 1e-9));
        lv.factor = factors[k];
        lv.sx = static_cast<double>(lw) / rgb.width();
        lv.sy = static_cast<double>(lh) / rgb.height();
        const ChannelStack stack = assemble(resample(rgb, lw, lh), model.channels);
        auto dets = scan(stack, model, pauc, opts.scan);
        for (auto& d : dets) {
            d.box = level_to_image(d.box, lv);
            d.level = static_cast<int>(k);
        }
        per_level[k] = std::move(dets);
    });
    std::vector<Detection> all;
    for (auto& v : per_level) all.insert(all.end(), v.begin(), v.end());
    return opts.nms ? nms_greedy(std::move(all), opts.nms_overlap) : all;
}

}  // namespace spdet
