#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "spdet/boost.hpp"
#include "spdet/detect.hpp"

namespace spdet {

/// Window features of positive crops. Each crop holds the window at (x0, y0).
RawSamples positive_features(const std::vector<RasterImage>& crops, int x0, int y0, int window_w, int window_h,
                             ChannelConfig channels);

struct BootstrapConfig {
    ChannelConfig channels = ChannelConfig::SpCovSpLbpAcf;
    int window_w = 64;
    int window_h = 128;
    AdaBoostOptions boost;
    /// Trees per stage (stage 0 first); missing entries use boost.trees.
    std::vector<int> stage_trees;
    int stages = 3;                      // mining rounds after stage 0
    std::size_t initial_negatives = 5000;
    std::size_t stage_negatives = 5000;
    std::size_t max_per_image = 25;
    PyramidSpec pyramid;
    std::uint64_t seed = 1;
};

struct StageSummary {
    int stage = 0;
    std::size_t negatives_added = 0;
    std::size_t negatives_total = 0;
    std::size_t positives = 0;
    int trees = 0;
    double final_loss = 0.0;
    bool early_stopped = false;
    double seconds = 0.0;
};

struct BootstrapResult {
    BoostedModel model;
    RawSamples negatives;
    std::vector<int> negative_image_ids;  // index into the negative image list
    std::vector<StageSummary> stages;
    std::vector<std::string> warnings;
};

/// Uniformly random cell-aligned windows over random pyramid levels of random images.
RawSamples random_negatives(const std::vector<RasterImage>& images, std::size_t count, int window_w, int window_h,
                            ChannelConfig channels, const PyramidSpec& pyramid, std::uint64_t seed,
                            std::vector<int>* image_ids = nullptr);

struct HardNegative {
    int image = 0;
    double score = 0.0;
    std::vector<float> features;
};

/// Cascade survivors of every negative image (after per-image NMS, top
/// `max_per_image` by score), then the global top `cap` by (score desc, image,
/// scan order).
std::vector<HardNegative> mine_hard_negatives(const BoostedModel& model, const std::vector<RasterImage>& images,
                                              const PyramidSpec& pyramid, std::size_t max_per_image, std::size_t cap);

using StageCallback = std::function<void(const StageSummary&)>;

BootstrapResult bootstrap_train(const RawSamples& positives, const std::vector<RasterImage>& negative_images,
                                const BootstrapConfig& cfg, const StageCallback& on_stage = {});

}  // namespace spdet
