#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "spdet/channel_stack.hpp"
#include "spdet/channels.hpp"
#include "spdet/imgcore.hpp"

namespace spdet {

inline constexpr int kCovPairs = kLowLevelCount * (kLowLevelCount + 1) / 2;  // 45
inline constexpr int kCorrPairs = kLowLevelCount * (kLowLevelCount - 1) / 2;  // 36
inline constexpr int kCovVectorSize = 42;                                     // 7 var + 35 corr

using i128 = __int128;

/// Summed-area tables of the 9 low-level planes and their 45 pairwise products.
///
/// Planes are converted to fixed point (positional planes are integers already,
/// the rest are scaled by 2^24) and accumulated in wrapping 64-bit integers.
/// Rectangle sums are exact: small rectangles need one lookup, larger ones are
/// summed blockwise in 128 bits. Exactness makes patch statistics identical
/// whether a window is processed alone or embedded in a larger image.
class CovIntegrals {
public:
    explicit CovIntegrals(const RasterImage& lowlevel);

    int width() const { return width_; }
    int height() const { return height_; }

    static double scale(int feature) { return feature < 2 ? 1.0 : 16777216.0; }

    /// Exact integer sum of fixed-point feature i over r.
    std::int64_t raw_sum(int i, const Rect& r) const;
    /// Exact integer sum of fixed-point f_i * f_j over r (any i, j order).
    i128 raw_product_sum(int i, int j, const Rect& r) const;

    double sum(int i, const Rect& r) const { return static_cast<double>(raw_sum(i, r)) / scale(i); }
    double product_sum(int i, int j, const Rect& r) const {
        return static_cast<double>(raw_product_sum(i, j, r)) / (scale(i) * scale(j));
    }

    /// All 9 feature sums and 45 product sums (upper triangle, row-major) of r;
    /// r must lie inside the image.
    void rect_moments(const Rect& r, std::span<std::int64_t, kLowLevelCount> sums,
                      std::span<i128, kCovPairs> products) const;

private:
    void block_moments(const Rect& r, std::span<std::int64_t, kLowLevelCount> sums,
                       std::span<i128, kCovPairs> products) const;
    static constexpr int kSlots = kLowLevelCount + kCovPairs;
    void check(const Rect& r) const;
    std::int64_t corner_sum(int slot, const Rect& r) const;

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint64_t> table_;  // (h+1) x (w+1) x kSlots
};

/// Index of pair (i, j), i <= j, in the 45-entry upper triangle.
int cov_pair_index(int i, int j);

struct PatchStats {
    std::array<double, kLowLevelCount> var{};
    std::array<double, kCorrPairs> corr{};  // pairs i < j, row-major

    double correlation(int i, int j) const;
};

CovIntegrals cov_integrals(const RasterImage& lowlevel);

/// Population variances and clamped correlation coefficients of a patch.
PatchStats patch_stats(const CovIntegrals& ci, const Rect& patch);

/// The pooled 42-vector: variances of features 2..8 followed by correlations of all
/// pairs except (x, y), lexicographic.
std::array<float, kCovVectorSize> cov_vector(const PatchStats& s);

struct PoolConfig {
    std::vector<int> patch_sizes;
    int patch_stride = 1;
    int pool_region = 4;
    int pool_stride = 4;

    static PoolConfig sp_cov() { return {{8, 16, 32}, 1, 4, 4}; }
    static PoolConfig sp_lbp() { return {{4}, 1, 8, 4}; }
    /// One patch per cell: the un-pooled ablation.
    static PoolConfig cov_unpooled() { return {{8, 16, 32}, 4, 4, 4}; }
};

/// Max-pooled covariance vectors for every patch size: 42 planes per size.
ChannelStack pooled_covariance(const CovIntegrals& ci, const PoolConfig& cfg);

/// 126 pooled planes + 7 raw statistic planes + L, U, V: 136 planes.
ChannelStack sp_cov_stack(const RasterImage& rgb, const PoolConfig& cfg = PoolConfig::sp_cov());

/// sp-LBP (58 max-pooled patch histograms) followed by LBP (58 per-cell histograms).
ChannelStack sp_lbp_stack(const RasterImage& lum, const PoolConfig& cfg = PoolConfig::sp_lbp());

/// Plain per-cell uniform-LBP histograms: 58 planes.
ChannelStack lbp_cell_stack(const RasterImage& lum);

enum class ChannelConfig {
    AcfLbp,          // M+O+LUV+LBP
    SpCovLuv,        // sp-Cov+LUV
    SpCovAcf,        // sp-Cov+M+O+LUV
    SpCovSpLbpAcf,   // sp-Cov+sp-LBP+M+O+LUV
};

ChannelConfig parse_channel_config(std::string_view name);
std::string_view channel_config_name(ChannelConfig cfg);
int channel_count(ChannelConfig cfg);

/// Full channel stack of an RGB image for a configuration.
ChannelStack assemble(const RasterImage& rgb, ChannelConfig cfg);
ChannelStack assemble(const RasterImage& rgb, std::string_view config_name);

/// Context margins (pixels) needed so that a window's channels do not depend on
/// what lies outside the crop: left/top and right/bottom.
inline constexpr int kContextLead = 4;
inline constexpr int kContextTrail = 32;

/// Channels of the window_w x window_h window at pixel (x0, y0) of `rgb`, computed
/// on a clipped context crop. x0 and y0 must be multiples of 4 for the result to
/// equal the corresponding cells of assemble(rgb).
std::vector<float> window_channels(const RasterImage& rgb, int x0, int y0, int window_w, int window_h,
                                   ChannelConfig cfg);

}  // namespace spdet
