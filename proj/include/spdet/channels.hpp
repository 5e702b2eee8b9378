#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "spdet/channel_stack.hpp"
#include "spdet/imgcore.hpp"

namespace spdet {

/// Plane order of the low-level statistic map.
enum LowLevelIndex : int {
    kPosX = 0,
    kPosY = 1,
    kAbsIx = 2,
    kAbsIy = 3,
    kAbsIxx = 4,
    kAbsIyy = 5,
    kMagnitude = 6,
    kOrient1 = 7,
    kOrient2 = 8,
};

inline constexpr int kLowLevelCount = 9;
inline constexpr int kOrientBins = 6;
inline constexpr int kUniformCodes = 58;
inline constexpr std::uint8_t kLbpSentinel = 58;

const std::array<const char*, kLowLevelCount>& lowlevel_names();

/// 9-plane map [x, y, |Ix|, |Iy|, |Ixx|, |Iyy|, M, O1, O2] of a gray plane.
RasterImage lowlevel9(const RasterImage& gray);

/// O1 = atan(|Ix|/|Iy|) with the degenerate limits pi/2 (Iy = 0, Ix != 0) and 0 (both 0).
float orientation_o1(float ix, float iy);

/// Sign-aware orientation folded into (0, pi].
float orientation_o2(float ix, float iy);

/// Magnitude-weighted soft vote of O2 over kOrientBins bins spanning [0, pi].
/// Values outside the outermost bin centres go entirely to the edge bin.
void orientation_vote(float o2, float magnitude, std::span<float, kOrientBins> bins);

/// L, U, V, M and 6 orientation planes, mean-aggregated to 4x4 cells.
ChannelStack acf_channels(const RasterImage& luv);

/// 256-entry table: uniform byte -> its rank in 0..57, otherwise kLbpSentinel.
const std::array<std::uint8_t, 256>& uniform_mapping();

/// Number of circular 0/1 transitions in an 8-bit pattern.
int lbp_transitions(std::uint8_t byte);

/// Raw 8-bit LBP code of interior pixel (x, y): bit k set iff neighbour k >= centre,
/// neighbours clockwise from the top-left.
std::uint8_t lbp_byte(const RasterImage& plane, int x, int y);

struct LbpCodeMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> codes;  // row-major, 0..58

    std::uint8_t at(int x, int y) const { return codes[static_cast<std::size_t>(y) * width + x]; }
};

LbpCodeMap lbp_codes(const RasterImage& plane);

}  // namespace spdet
