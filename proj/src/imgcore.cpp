#include "spdet/imgcore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spdet/errors.hpp"

namespace spdet {

RasterImage::RasterImage(int width, int height, int planes, float fill)
    : width_(width), height_(height), planes_(planes) {
    if (width < 1 || height < 1 || planes < 1) {
        throw InvalidInput("RasterImage: dimensions must be >= 1, got " + std::to_string(width) + "x" +
                           std::to_string(height) + "x" + std::to_string(planes));
    }
    data_.assign(static_cast<std::size_t>(width) * height * planes, fill);
}

std::span<float> RasterImage::plane(int p) {
    return std::span<float>(data_).subspan(static_cast<std::size_t>(p) * plane_size(), plane_size());
}

std::span<const float> RasterImage::plane(int p) const {
    return std::span<const float>(data_).subspan(static_cast<std::size_t>(p) * plane_size(), plane_size());
}

RasterImage RasterImage::plane_image(int p) const {
    if (p < 0 || p >= planes_) throw BoundsError("plane index out of range");
    RasterImage out(width_, height_, 1);
    auto src = plane(p);
    std::copy(src.begin(), src.end(), out.data().begin());
    return out;
}

namespace {

void require_single_plane(const RasterImage& img, const char* op) {
    if (img.empty()) throw InvalidInput(std::string(op) + ": empty image");
    if (img.planes() != 1) throw InvalidInput(std::string(op) + ": expected a single plane");
}

double srgb_to_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

}  // namespace

RasterImage rgb_to_luv(const RasterImage& rgb) {
    if (rgb.empty() || rgb.planes() != 3) throw InvalidInput("rgb_to_luv: expected 3 planes");

    // D65 reference white chromaticity.
    constexpr double xn = 0.95047, yn = 1.0, zn = 1.08883;
    const double dn = xn + 15.0 * yn + 3.0 * zn;
    const double un = 4.0 * xn / dn;
    const double vn = 9.0 * yn / dn;
    constexpr double eps = 216.0 / 24389.0;
    constexpr double kappa = 24389.0 / 27.0;

    const auto& s = kLuvScaling;
    RasterImage out(rgb.width(), rgb.height(), 3);
    auto rp = rgb.plane(0), gp = rgb.plane(1), bp = rgb.plane(2);
    auto lp = out.plane(0), up = out.plane(1), vp = out.plane(2);
    for (std::size_t i = 0; i < rgb.plane_size(); ++i) {
        const double r = srgb_to_linear(std::clamp(rp[i] / 255.0, 0.0, 1.0));
        const double g = srgb_to_linear(std::clamp(gp[i] / 255.0, 0.0, 1.0));
        const double b = srgb_to_linear(std::clamp(bp[i] / 255.0, 0.0, 1.0));
        const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
        const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
        const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
        const double yr = y / yn;
        const double l = yr > eps ? 116.0 * std::cbrt(yr) - 16.0 : kappa * yr;
        const double d = x + 15.0 * y + 3.0 * z;
        double u = 0.0, v = 0.0;
        if (d > 0.0) {
            u = 13.0 * l * (4.0 * x / d - un);
            v = 13.0 * l * (9.0 * y / d - vn);
        }
        lp[i] = static_cast<float>(l * s.l_scale);
        up[i] = static_cast<float>((u + s.u_offset) * s.u_scale);
        vp[i] = static_cast<float>((v + s.v_offset) * s.v_scale);
    }
    return out;
}

RasterImage luminance(const RasterImage& luv) {
    if (luv.empty() || luv.planes() != 3) throw InvalidInput("luminance: expected a 3-plane LUV image");
    return luv.plane_image(0);
}

std::pair<RasterImage, RasterImage> gradient(const RasterImage& plane) {
    require_single_plane(plane, "gradient");
    const int w = plane.width(), h = plane.height();
    RasterImage ix(w, h), iy(w, h);
    for (int y = 0; y < h; ++y) {
        const int ym = std::max(y - 1, 0), yp = std::min(y + 1, h - 1);
        for (int x = 0; x < w; ++x) {
            const int xm = std::max(x - 1, 0), xp = std::min(x + 1, w - 1);
            ix.at(0, x, y) = (plane.at(0, xp, y) - plane.at(0, xm, y)) * 0.5f;
            iy.at(0, x, y) = (plane.at(0, x, yp) - plane.at(0, x, ym)) * 0.5f;
        }
    }
    return {std::move(ix), std::move(iy)};
}

std::pair<RasterImage, RasterImage> second_derivative(const RasterImage& plane) {
    require_single_plane(plane, "second_derivative");
    const int w = plane.width(), h = plane.height();
    RasterImage ixx(w, h), iyy(w, h);
    for (int y = 0; y < h; ++y) {
        const int ym = std::max(y - 1, 0), yp = std::min(y + 1, h - 1);
        for (int x = 0; x < w; ++x) {
            const int xm = std::max(x - 1, 0), xp = std::min(x + 1, w - 1);
            const float c = plane.at(0, x, y);
            ixx.at(0, x, y) = plane.at(0, xm, y) - 2.0f * c + plane.at(0, xp, y);
            iyy.at(0, x, y) = plane.at(0, x, ym) - 2.0f * c + plane.at(0, x, yp);
        }
    }
    return {std::move(ixx), std::move(iyy)};
}

IntegralImage::IntegralImage(const RasterImage& plane) : width_(plane.width()), height_(plane.height()) {
    require_single_plane(plane, "integral");
    const std::size_t stride = static_cast<std::size_t>(width_) + 1;
    sums_.assign(stride * (height_ + 1), 0.0);
    for (int r = 0; r < height_; ++r) {
        double row = 0.0;
        for (int c = 0; c < width_; ++c) {
            row += plane.at(0, c, r);
            sums_[(r + 1) * stride + c + 1] = sums_[r * stride + c + 1] + row;
        }
    }
}

double IntegralImage::rect_sum(const Rect& r) const {
    if (r.w < 1 || r.h < 1 || r.x < 0 || r.y < 0 || r.x + r.w > width_ || r.y + r.h > height_) {
        throw BoundsError("rect_sum: rectangle outside the integral image");
    }
    return entry(r.y + r.h, r.x + r.w) - entry(r.y, r.x + r.w) - entry(r.y + r.h, r.x) + entry(r.y, r.x);
}

IntegralImage integral(const RasterImage& plane) { return IntegralImage(plane); }

double rect_sum(const IntegralImage& ii, const Rect& r) { return ii.rect_sum(r); }

RasterImage crop_resampled(const RasterImage& img, double sx, double sy, double sw, double sh, int dst_w,
                           int dst_h) {
    if (dst_w < 1 || dst_h < 1) throw InvalidInput("resample: target dimensions must be >= 1");
    if (img.empty()) throw InvalidInput("resample: empty image");
    const int w = img.width(), h = img.height();
    const double kx = sw / dst_w, ky = sh / dst_h;

    struct Tap {
        int i0, i1;
        float t;
    };
    auto taps = [](int n, double origin, double k, int limit) {
        std::vector<Tap> out(n);
        for (int i = 0; i < n; ++i) {
            double s = origin + (i + 0.5) * k - 0.5;
            s = std::clamp(s, 0.0, static_cast<double>(limit - 1));
            const int i0 = static_cast<int>(std::floor(s));
            const int i1 = std::min(i0 + 1, limit - 1);
            out[i] = {i0, i1, static_cast<float>(s - i0)};
        }
        return out;
    };
    const auto tx = taps(dst_w, sx, kx, w);
    const auto ty = taps(dst_h, sy, ky, h);

    RasterImage out(dst_w, dst_h, img.planes());
    for (int p = 0; p < img.planes(); ++p) {
        for (int y = 0; y < dst_h; ++y) {
            const auto& a = ty[y];
            for (int x = 0; x < dst_w; ++x) {
                const auto& b = tx[x];
                const float top = img.at(p, b.i0, a.i0) * (1.0f - b.t) + img.at(p, b.i1, a.i0) * b.t;
                const float bot = img.at(p, b.i0, a.i1) * (1.0f - b.t) + img.at(p, b.i1, a.i1) * b.t;
                out.at(p, x, y) = top * (1.0f - a.t) + bot * a.t;
            }
        }
    }
    return out;
}

RasterImage resample(const RasterImage& img, int new_w, int new_h) {
    if (new_w < 1 || new_h < 1) throw InvalidInput("resample: target dimensions must be >= 1");
    if (new_w == img.width() && new_h == img.height()) return img;
    return crop_resampled(img, 0.0, 0.0, img.width(), img.height(), new_w, new_h);
}

RasterImage crop(const RasterImage& img, const Rect& r) {
    if (r.w < 1 || r.h < 1 || r.x < 0 || r.y < 0 || r.x + r.w > img.width() || r.y + r.h > img.height()) {
        throw BoundsError("crop: rectangle outside image");
    }
    RasterImage out(r.w, r.h, img.planes());
    for (int p = 0; p < img.planes(); ++p) {
        for (int y = 0; y < r.h; ++y) {
            for (int x = 0; x < r.w; ++x) out.at(p, x, y) = img.at(p, r.x + x, r.y + y);
        }
    }
    return out;
}

RasterImage aggregate(const RasterImage& img, int cell, AggregateMode mode) {
    if (cell < 1) throw InvalidInput("aggregate: cell must be >= 1");
    if (img.empty()) throw InvalidInput("aggregate: empty image");
    const int gw = img.width() / cell, gh = img.height() / cell;
    if (gw < 1 || gh < 1) throw InvalidInput("aggregate: image smaller than one cell");
    RasterImage out(gw, gh, img.planes());
    const float norm = 1.0f / static_cast<float>(cell * cell);
    for (int p = 0; p < img.planes(); ++p) {
        for (int cy = 0; cy < gh; ++cy) {
            for (int cx = 0; cx < gw; ++cx) {
                float acc = mode == AggregateMode::Max ? img.at(p, cx * cell, cy * cell) : 0.0f;
                for (int y = cy * cell; y < (cy + 1) * cell; ++y) {
                    for (int x = cx * cell; x < (cx + 1) * cell; ++x) {
                        const float v = img.at(p, x, y);
                        if (mode == AggregateMode::Max) {
                            acc = std::max(acc, v);
                        } else {
                            acc += v;
                        }
                    }
                }
                out.at(p, cx, cy) = mode == AggregateMode::Mean ? acc * norm : acc;
            }
        }
    }
    return out;
}

}  // namespace spdet
