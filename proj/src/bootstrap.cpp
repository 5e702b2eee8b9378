#include "spdet/bootstrap.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <tuple>

#include "spdet/errors.hpp"
#include "spdet/parallel.hpp"

namespace spdet {

namespace {

struct LevelDims {
    int w = 0;
    int h = 0;
};

std::vector<LevelDims> level_dims(const RasterImage& img, int window_w, int window_h, const PyramidSpec& spec) {
    std::vector<LevelDims> out;
    for (double f : pyramid_factors(img.width(), img.height(), window_w, window_h, spec)) {
        out.push_back({static_cast<int>(std::floor(img.width() * f + 1e-9)),
                       static_cast<int>(std::floor(img.height() * f + 1e-9))});
    }
    return out;
}

}  // namespace

RawSamples positive_features(const std::vector<RasterImage>& crops, int x0, int y0, int window_w, int window_h,
                             ChannelConfig channels) {
    const std::size_t dim = static_cast<std::size_t>(channel_count(channels)) * (window_w / 4) * (window_h / 4);
    RawSamples out(dim);
    out.values.resize(dim * crops.size());
    parallel_for(crops.size(), [&](std::size_t i) {
        const auto& c = crops[i];
        if (c.width() < x0 + window_w || c.height() < y0 + window_h) {
            throw InvalidInput("positive_features: crop " + std::to_string(i) + " smaller than the window");
        }
        auto f = window_channels(c, x0, y0, window_w, window_h, channels);
        std::copy(f.begin(), f.end(), out.values.begin() + i * dim);
    });
    return out;
}

RawSamples random_negatives(const std::vector<RasterImage>& images, std::size_t count, int window_w, int window_h,
                            ChannelConfig channels, const PyramidSpec& pyramid, std::uint64_t seed,
                            std::vector<int>* image_ids) {
    const std::size_t dim = static_cast<std::size_t>(channel_count(channels)) * (window_w / 4) * (window_h / 4);
    RawSamples out(dim);
    if (image_ids) image_ids->clear();
    std::vector<std::vector<LevelDims>> levels(images.size());
    std::vector<int> usable;
    for (std::size_t i = 0; i < images.size(); ++i) {
        levels[i] = level_dims(images[i], window_w, window_h, pyramid);
        if (!levels[i].empty()) usable.push_back(static_cast<int>(i));
    }
    if (usable.empty() || count == 0) return out;

    struct Draw {
        int image, level, x, y;
        std::size_t slot;
    };
    std::mt19937_64 rng(seed);
    std::vector<Draw> draws(count);
    for (std::size_t k = 0; k < count; ++k) {
        const int img = usable[std::uniform_int_distribution<std::size_t>(0, usable.size() - 1)(rng)];
        const auto& lv = levels[img];
        const int l = static_cast<int>(std::uniform_int_distribution<std::size_t>(0, lv.size() - 1)(rng));
        const int cx = std::uniform_int_distribution<int>(0, (lv[l].w - window_w) / 4)(rng);
        const int cy = std::uniform_int_distribution<int>(0, (lv[l].h - window_h) / 4)(rng);
        draws[k] = {img, l, cx * 4, cy * 4, k};
    }
    // One resample per (image, level) group.
    std::map<std::pair<int, int>, std::vector<Draw>> groups;
    for (const auto& d : draws) groups[{d.image, d.level}].push_back(d);
    std::vector<std::vector<Draw>> group_list;
    for (auto& [key, g] : groups) group_list.push_back(std::move(g));

    out.values.resize(dim * count);
    parallel_for(group_list.size(), [&](std::size_t gi) {
        const auto& g = group_list[gi];
        const auto& lv = levels[g.front().image][g.front().level];
        const RasterImage level = resample(images[g.front().image], lv.w, lv.h);
        for (const auto& d : g) {
            auto f = window_channels(level, d.x, d.y, window_w, window_h, channels);
            std::copy(f.begin(), f.end(), out.values.begin() + d.slot * dim);
        }
    });
    if (image_ids) {
        for (const auto& d : draws) image_ids->push_back(d.image);
    }
    return out;
}

std::vector<HardNegative> mine_hard_negatives(const BoostedModel& model, const std::vector<RasterImage>& images,
                                              const PyramidSpec& pyramid, std::size_t max_per_image,
                                              std::size_t cap) {
    struct Ranked {
        HardNegative neg;
        std::size_t order;
    };
    auto better = [](const Ranked& a, const Ranked& b) {
        return std::tie(b.neg.score, a.neg.image, a.order) < std::tie(a.neg.score, b.neg.image, b.order);
    };
    std::vector<Ranked> pool;
    std::mutex mu;
    const int gw = model.grid_w(), gh = model.grid_h();
    auto trim = [&] {
        std::sort(pool.begin(), pool.end(), better);
        if (pool.size() > cap) pool.resize(cap);
    };

    parallel_for(images.size(), [&](std::size_t i) {
        const auto& img = images[i];
        std::vector<ChannelStack> stacks;
        std::vector<Detection> cands;
        struct Cell {
            int level, cx, cy;
        };
        std::vector<Cell> cells;
        for (const auto& lv : level_dims(img, model.window_w, model.window_h, pyramid)) {
            PyramidLevel pl;
            pl.sx = static_cast<double>(lv.w) / img.width();
            pl.sy = static_cast<double>(lv.h) / img.height();
            stacks.push_back(assemble(resample(img, lv.w, lv.h), model.channels));
            for (const auto& d : scan(stacks.back(), model)) {
                cells.push_back({static_cast<int>(stacks.size()) - 1, static_cast<int>(d.box.x) / 4,
                                 static_cast<int>(d.box.y) / 4});
                Detection m{level_to_image(d.box, pl), d.score, static_cast<int>(cands.size())};
                cands.push_back(m);
            }
        }
        auto kept = nms_greedy(std::move(cands));
        if (kept.size() > max_per_image) kept.resize(max_per_image);
        std::vector<Ranked> local;
        for (const auto& d : kept) {
            const Cell& c = cells[d.level];
            Ranked r;
            r.neg.image = static_cast<int>(i);
            r.neg.score = d.score;
            r.neg.features = stacks[c.level].window_features(c.cx, c.cy, gw, gh);
            r.order = static_cast<std::size_t>(d.level);
            local.push_back(std::move(r));
        }
        std::lock_guard<std::mutex> lock(mu);
        for (auto& r : local) pool.push_back(std::move(r));
        if (pool.size() > 2 * cap + max_per_image) trim();
    });
    trim();
    std::vector<HardNegative> out;
    out.reserve(pool.size());
    for (auto& r : pool) out.push_back(std::move(r.neg));
    return out;
}

BootstrapResult bootstrap_train(const RawSamples& positives, const std::vector<RasterImage>& negative_images,
                                const BootstrapConfig& cfg, const StageCallback& on_stage) {
    if (positives.count() == 0) throw InvalidInput("bootstrap: no positives");
    if (negative_images.empty()) throw InvalidInput("bootstrap: no negative images");
    if (cfg.stages < 0) throw InvalidInput("bootstrap: negative stage count");
    if (cfg.window_w % 4 != 0 || cfg.window_h % 4 != 0 || cfg.window_w < 8 || cfg.window_h < 8) {
        throw InvalidInput("bootstrap: window dims must be multiples of 4");
    }
    const std::size_t dim = static_cast<std::size_t>(channel_count(cfg.channels)) * (cfg.window_w / 4) *
                            (cfg.window_h / 4);
    if (positives.dim != dim) throw InvalidInput("bootstrap: positive feature length does not match the window");

    BootstrapResult res;
    res.negatives = random_negatives(negative_images, cfg.initial_negatives, cfg.window_w, cfg.window_h, cfg.channels,
                                     cfg.pyramid, cfg.seed, &res.negative_image_ids);
    if (res.negatives.count() == 0) throw InvalidInput("bootstrap: no negative windows could be sampled");

    for (int stage = 0; stage <= cfg.stages; ++stage) {
        const auto t0 = std::chrono::steady_clock::now();
        StageSummary sum;
        sum.stage = stage;
        if (stage > 0) {
            auto hard = mine_hard_negatives(res.model, negative_images, cfg.pyramid, cfg.max_per_image,
                                            cfg.stage_negatives);
            if (hard.empty()) {
                res.warnings.push_back("stage " + std::to_string(stage) + ": no false positives found");
            }
            for (auto& h : hard) {
                res.negatives.push(h.features);
                res.negative_image_ids.push_back(h.image);
            }
            sum.negatives_added = hard.size();
            if (hard.empty()) {
                sum.negatives_total = res.negatives.count();
                sum.positives = positives.count();
                sum.trees = static_cast<int>(res.model.trees.size());
                sum.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                res.stages.push_back(sum);
                if (on_stage) on_stage(sum);
                continue;
            }
        } else {
            sum.negatives_added = res.negatives.count();
        }
        AdaBoostOptions opts = cfg.boost;
        if (static_cast<std::size_t>(stage) < cfg.stage_trees.size()) opts.trees = cfg.stage_trees[stage];
        QuantTable quant = fit_quantizer(positives, res.negatives);
        AdaBoostResult fit;
        {
            TrainSet data(quant, positives, res.negatives);
            fit = adaboost(data, opts);
        }
        for (const auto& w : fit.warnings) res.warnings.push_back("stage " + std::to_string(stage) + ": " + w);
        sum.early_stopped = fit.early_stopped;
        sum.final_loss = fit.loss.empty() ? 1.0 : fit.loss.back();
        res.model = make_model(std::move(fit), std::move(quant), opts, cfg.window_w, cfg.window_h, cfg.channels);
        sum.negatives_total = res.negatives.count();
        sum.positives = positives.count();
        sum.trees = static_cast<int>(res.model.trees.size());
        sum.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.stages.push_back(sum);
        if (on_stage) on_stage(sum);
    }
    return res;
}

}  // namespace spdet
