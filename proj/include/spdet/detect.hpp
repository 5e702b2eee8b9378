#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "spdet/boost.hpp"
#include "spdet/evalkit.hpp"
#include "spdet/pauc.hpp"

namespace spdet {

struct Detection {
    Box box;
    double score = 0.0;
    int level = 0;
};

struct PyramidSpec {
    int scales_per_octave = 8;
    double max_upscale = 2.0;
};

struct PyramidLevel {
    RasterImage image;
    double factor = 1.0;
    double sx = 1.0;  // level width / original width
    double sy = 1.0;  // level height / original height
};

/// Scale factors max_upscale * 2^(-k / scales_per_octave) whose level
/// (floor(w f) x floor(h f)) still holds a window_w x window_h window.
std::vector<double> pyramid_factors(int width, int height, int window_w, int window_h, const PyramidSpec& spec);

std::vector<PyramidLevel> build_pyramid(const RasterImage& img, int window_w, int window_h, const PyramidSpec& spec);

Box level_to_image(const Box& b, const PyramidLevel& level);
Box image_to_level(const Box& b, const PyramidLevel& level);

/// Per-feature offsets of a window's features into a plane-major channel stack
/// of grid width `grid_w` and plane size `plane_size`, relative to the window's
/// top-left cell.
std::vector<std::uint32_t> window_offsets(int channels, int grid_w, std::size_t plane_size, int window_gw,
                                          int window_gh);

struct ScanOptions {
    int stride_cells = 1;
    double min_score = -std::numeric_limits<double>::infinity();
};

/// Scores every window of the stack; windows that pass the cascade (and reach
/// min_score) are returned as level-pixel boxes. With a pAUC model the returned
/// score is the calibrated one.
std::vector<Detection> scan(const ChannelStack& stack, const BoostedModel& model, const PaucModel* pauc = nullptr,
                            const ScanOptions& opts = {});

/// Greedy suppression by intersection over the smaller area.
std::vector<Detection> nms_greedy(std::vector<Detection> dets, double overlap = 0.65);

struct DetectOptions {
    PyramidSpec pyramid;
    ScanOptions scan;
    double nms_overlap = 0.65;
    bool nms = true;
};

std::vector<Detection> detect(const RasterImage& rgb, const BoostedModel& model, const PaucModel* pauc = nullptr,
                              const DetectOptions& opts = {});

}  // namespace spdet
