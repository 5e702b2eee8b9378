#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "spdet/evalkit.hpp"
#include "spdet/imgcore.hpp"

namespace spdet {

/// Synthetic pedestrian data: bright bar figures (head, torso, legs) on
/// textured colour noise with bar and blob distractors.
struct SynthSpec {
    int train_positives = 300;
    int train_negatives = 200;  // full negative images
    int test_images = 200;
    int window_w = 64;
    int window_h = 128;
    int crop_margin = 32;  // positive crops are (window + 2 margin) on each axis; covers the pooling context
    int image_w = 320;
    int image_h = 256;
    double min_scale = 1.0;
    double max_scale = 1.5;
    int max_people = 2;
    std::uint64_t seed = 7;
};

struct SynthImage {
    RasterImage image;
    std::vector<GtBox> gt;
};

struct SynthDataset {
    std::vector<RasterImage> positives;
    std::vector<RasterImage> negatives;
    std::vector<SynthImage> test;
};

RasterImage synth_background(int w, int h, std::mt19937_64& rng);
/// Draws a figure filling the window box `b` (window_w x window_h at scale b.h / window_h).
void draw_pedestrian(RasterImage& img, const Box& b, std::mt19937_64& rng);

SynthDataset make_synth_dataset(const SynthSpec& spec);

/// train/pos, train/neg, test/images and test/annotations under `root`.
void write_synth_dataset(const std::filesystem::path& root, const SynthDataset& data);

}  // namespace spdet
