#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace spdet {

struct Rect {
    int x = 0;
    int y = 0;
    int w = 1;
    int h = 1;

    bool operator==(const Rect&) const = default;
};

/// Planar float image. Samples are stored plane-major, each plane row-major.
class RasterImage {
public:
    RasterImage() = default;
    RasterImage(int width, int height, int planes = 1, float fill = 0.0f);

    int width() const { return width_; }
    int height() const { return height_; }
    int planes() const { return planes_; }
    bool empty() const { return data_.empty(); }
    std::size_t plane_size() const { return static_cast<std::size_t>(width_) * height_; }

    float& at(int plane, int x, int y) { return data_[index(plane, x, y)]; }
    float at(int plane, int x, int y) const { return data_[index(plane, x, y)]; }

    std::span<float> plane(int p);
    std::span<const float> plane(int p) const;
    std::span<float> data() { return data_; }
    std::span<const float> data() const { return data_; }

    /// Copies plane `p` out as a single-plane image.
    RasterImage plane_image(int p) const;

    bool operator==(const RasterImage&) const = default;

private:
    std::size_t index(int plane, int x, int y) const {
        return (static_cast<std::size_t>(plane) * height_ + y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    int planes_ = 0;
    std::vector<float> data_;
};

/// Summed-area table with a zero top row and left column.
class IntegralImage {
public:
    IntegralImage() = default;
    explicit IntegralImage(const RasterImage& plane);

    int width() const { return width_; }
    int height() const { return height_; }

    /// Sum of source pixels in rows [0, r) and columns [0, c).
    double entry(int r, int c) const { return sums_[static_cast<std::size_t>(r) * (width_ + 1) + c]; }

    double rect_sum(const Rect& r) const;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> sums_;
};

/// Affine maps that bring CIE L*, u*, v* into [0, 1]. Stored in model files.
struct LuvScaling {
    double l_scale = 1.0 / 100.0;
    double u_offset = 134.0;
    double u_scale = 1.0 / 354.0;
    double v_offset = 140.0;
    double v_scale = 1.0 / 262.0;
};

inline constexpr LuvScaling kLuvScaling{};

enum class AggregateMode { Mean, Sum, Max };

/// sRGB (samples in [0,255]) to scaled CIE LUV, D65 white.
RasterImage rgb_to_luv(const RasterImage& rgb);

RasterImage luminance(const RasterImage& luv);

/// Central differences with replicated borders: returns (Ix, Iy).
std::pair<RasterImage, RasterImage> gradient(const RasterImage& plane);

/// [1,-2,1] second differences with replicated borders: returns (Ixx, Iyy).
std::pair<RasterImage, RasterImage> second_derivative(const RasterImage& plane);

IntegralImage integral(const RasterImage& plane);
double rect_sum(const IntegralImage& ii, const Rect& r);

/// Bilinear resampling with pixel-centre alignment. Identity dims return a copy.
RasterImage resample(const RasterImage& img, int new_w, int new_h);

/// Bilinear sampling of the source region (sx, sy, sw, sh) into a dst_w x dst_h
/// image; coordinates outside the source are clamped to the border.
RasterImage crop_resampled(const RasterImage& img, double sx, double sy, double sw, double sh,
                           int dst_w, int dst_h);

/// Integer crop; the rectangle must lie inside the image.
RasterImage crop(const RasterImage& img, const Rect& r);

/// Per-cell statistic over non-overlapping cell x cell blocks; partial trailing
/// cells are dropped.
RasterImage aggregate(const RasterImage& plane, int cell, AggregateMode mode);

}  // namespace spdet
