#include "spdet/channels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "spdet/errors.hpp"

namespace spdet {

// ---------------------------------------------------------------------------
// ChannelStack

std::span<float> ChannelStack::add_plane(std::string name) {
    names_.push_back(std::move(name));
    data_.resize(data_.size() + plane_size(), 0.0f);
    return plane(count() - 1);
}

void ChannelStack::append(const ChannelStack& other) {
    if (other.grid_w_ != grid_w_ || other.grid_h_ != grid_h_) {
        throw InvalidInput("ChannelStack::append: grid dimensions differ");
    }
    names_.insert(names_.end(), other.names_.begin(), other.names_.end());
    warnings_.insert(warnings_.end(), other.warnings_.begin(), other.warnings_.end());
    data_.insert(data_.end(), other.data_.begin(), other.data_.end());
}

std::span<float> ChannelStack::plane(int c) {
    return std::span<float>(data_).subspan(static_cast<std::size_t>(c) * plane_size(), plane_size());
}

std::span<const float> ChannelStack::plane(int c) const {
    return std::span<const float>(data_).subspan(static_cast<std::size_t>(c) * plane_size(), plane_size());
}

void ChannelStack::window_features(int cx, int cy, int gw, int gh, std::span<float> out) const {
    if (cx < 0 || cy < 0 || cx + gw > grid_w_ || cy + gh > grid_h_) {
        throw BoundsError("window_features: window outside channel grid");
    }
    if (out.size() != static_cast<std::size_t>(count()) * gw * gh) {
        throw InvalidInput("window_features: output size mismatch");
    }
    std::size_t k = 0;
    for (int c = 0; c < count(); ++c) {
        const float* base = data_.data() + static_cast<std::size_t>(c) * plane_size();
        for (int y = 0; y < gh; ++y) {
            const float* row = base + static_cast<std::size_t>(cy + y) * grid_w_ + cx;
            std::copy(row, row + gw, out.begin() + k);
            k += gw;
        }
    }
}

std::vector<float> ChannelStack::window_features(int cx, int cy, int gw, int gh) const {
    std::vector<float> out(static_cast<std::size_t>(count()) * gw * gh);
    window_features(cx, cy, gw, gh, out);
    return out;
}

ChannelStack ChannelStack::crop(int cx, int cy, int gw, int gh) const {
    ChannelStack out(gw, gh);
    auto feats = window_features(cx, cy, gw, gh);
    out.names_ = names_;
    out.warnings_ = warnings_;
    out.data_ = std::move(feats);
    return out;
}

// ---------------------------------------------------------------------------
// Low-level statistics

const std::array<const char*, kLowLevelCount>& lowlevel_names() {
    static const std::array<const char*, kLowLevelCount> names = {"x",    "y",    "|Ix|", "|Iy|", "|Ixx|",
                                                                  "|Iyy|", "M",   "O1",   "O2"};
    return names;
}

float orientation_o1(float ix, float iy) {
    const float ax = std::fabs(ix), ay = std::fabs(iy);
    if (ay == 0.0f) return ax == 0.0f ? 0.0f : std::numbers::pi_v<float> / 2.0f;
    return std::atan(ax / ay);
}

float orientation_o2(float ix, float iy) {
    // +0.0f folds negative zeros so atan2 never returns -pi for a zero Iy.
    const float a = std::atan2(iy + 0.0f, ix + 0.0f);
    return a > 0.0f ? a : a + std::numbers::pi_v<float>;
}

void orientation_vote(float o2, float magnitude, std::span<float, kOrientBins> bins) {
    constexpr float width = std::numbers::pi_v<float> / kOrientBins;
    const float pos = o2 / width - 0.5f;
    if (pos <= 0.0f) {
        bins[0] += magnitude;
        return;
    }
    if (pos >= kOrientBins - 1) {
        bins[kOrientBins - 1] += magnitude;
        return;
    }
    const int b0 = static_cast<int>(pos);
    const float t = pos - static_cast<float>(b0);
    bins[b0] += magnitude * (1.0f - t);
    bins[b0 + 1] += magnitude * t;
}

RasterImage lowlevel9(const RasterImage& gray) {
    if (gray.empty() || gray.planes() != 1) throw InvalidInput("lowlevel9: expected a single plane");
    const auto [ix, iy] = gradient(gray);
    const auto [ixx, iyy] = second_derivative(gray);
    const int w = gray.width(), h = gray.height();
    RasterImage out(w, h, kLowLevelCount);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float gx = ix.at(0, x, y), gy = iy.at(0, x, y);
            out.at(kPosX, x, y) = static_cast<float>(x);
            out.at(kPosY, x, y) = static_cast<float>(y);
            out.at(kAbsIx, x, y) = std::fabs(gx);
            out.at(kAbsIy, x, y) = std::fabs(gy);
            out.at(kAbsIxx, x, y) = std::fabs(ixx.at(0, x, y));
            out.at(kAbsIyy, x, y) = std::fabs(iyy.at(0, x, y));
            out.at(kMagnitude, x, y) = std::sqrt(gx * gx + gy * gy);
            out.at(kOrient1, x, y) = orientation_o1(gx, gy);
            out.at(kOrient2, x, y) = orientation_o2(gx, gy);
        }
    }
    return out;
}

ChannelStack acf_channels(const RasterImage& luv) {
    if (luv.empty() || luv.planes() != 3) throw InvalidInput("acf_channels: expected a 3-plane LUV image");
    const int w = luv.width(), h = luv.height();
    const RasterImage gray = luminance(luv);
    const auto [ix, iy] = gradient(gray);

    RasterImage mo(w, h, 1 + kOrientBins);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float gx = ix.at(0, x, y), gy = iy.at(0, x, y);
            const float m = std::sqrt(gx * gx + gy * gy);
            mo.at(0, x, y) = m;
            std::array<float, kOrientBins> bins{};
            orientation_vote(orientation_o2(gx, gy), m, bins);
            for (int b = 0; b < kOrientBins; ++b) mo.at(1 + b, x, y) = bins[b];
        }
    }

    const RasterImage luv_cells = aggregate(luv, 4, AggregateMode::Mean);
    const RasterImage mo_cells = aggregate(mo, 4, AggregateMode::Mean);
    ChannelStack stack(luv_cells.width(), luv_cells.height());
    const char* luv_names[3] = {"L", "U", "V"};
    for (int p = 0; p < 3; ++p) {
        auto dst = stack.add_plane(luv_names[p]);
        auto src = luv_cells.plane(p);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    for (int p = 0; p < 1 + kOrientBins; ++p) {
        auto dst = stack.add_plane(p == 0 ? std::string("M") : "O" + std::to_string(p - 1));
        auto src = mo_cells.plane(p);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return stack;
}

// ---------------------------------------------------------------------------
// Uniform LBP

int lbp_transitions(std::uint8_t byte) {
    const std::uint8_t rotated = static_cast<std::uint8_t>((byte >> 1) | (byte << 7));
    return std::popcount(static_cast<unsigned>(byte ^ rotated));
}

const std::array<std::uint8_t, 256>& uniform_mapping() {
    static const std::array<std::uint8_t, 256> table = [] {
        std::array<std::uint8_t, 256> t{};
        std::uint8_t next = 0;
        for (int b = 0; b < 256; ++b) {
            t[b] = lbp_transitions(static_cast<std::uint8_t>(b)) <= 2 ? next++ : kLbpSentinel;
        }
        return t;
    }();
    return table;
}

namespace {
constexpr int kNeighbourDx[8] = {-1, 0, 1, 1, 1, 0, -1, -1};
constexpr int kNeighbourDy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
}  // namespace

std::uint8_t lbp_byte(const RasterImage& plane, int x, int y) {
    const float c = plane.at(0, x, y);
    std::uint8_t code = 0;
    for (int k = 0; k < 8; ++k) {
        if (plane.at(0, x + kNeighbourDx[k], y + kNeighbourDy[k]) >= c) code |= static_cast<std::uint8_t>(1u << k);
    }
    return code;
}

LbpCodeMap lbp_codes(const RasterImage& plane) {
    if (plane.empty() || plane.planes() != 1) throw InvalidInput("lbp_codes: expected a single plane");
    if (plane.width() < 3 || plane.height() < 3) throw InvalidInput("lbp_codes: plane smaller than 3x3");
    const auto& map = uniform_mapping();
    LbpCodeMap out;
    out.width = plane.width();
    out.height = plane.height();
    out.codes.assign(static_cast<std::size_t>(out.width) * out.height, kLbpSentinel);
    for (int y = 1; y + 1 < out.height; ++y) {
        for (int x = 1; x + 1 < out.width; ++x) {
            out.codes[static_cast<std::size_t>(y) * out.width + x] = map[lbp_byte(plane, x, y)];
        }
    }
    return out;
}

}  // namespace spdet
