#include "spdet/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "spdet/errors.hpp"

namespace spdet {

namespace {

constexpr std::int64_t kFixedLimit = std::int64_t{1} << 26;
// Rectangles up to this many pixels have product sums below 2^63 (|q| <= 2^26).
constexpr std::int64_t kExactArea = 2048;

}  // namespace

int cov_pair_index(int i, int j) {
    if (i > j) std::swap(i, j);
    // Row i of the upper triangle starts after sum_{k<i} (9 - k) entries.
    return i * kLowLevelCount - i * (i - 1) / 2 + (j - i);
}

// ---------------------------------------------------------------------------
// CovIntegrals

CovIntegrals::CovIntegrals(const RasterImage& ll) : width_(ll.width()), height_(ll.height()) {
    if (ll.empty() || ll.planes() != kLowLevelCount) throw InvalidInput("cov_integrals: expected 9 planes");
    const std::size_t stride = static_cast<std::size_t>(width_ + 1) * kSlots;
    table_.assign(stride * (height_ + 1), 0);

    std::array<std::int64_t, kLowLevelCount> q{};
    std::array<std::uint64_t, kSlots> row{};
    std::vector<std::int64_t> fixed(static_cast<std::size_t>(width_) * kLowLevelCount);
    for (int y = 0; y < height_; ++y) {
        row.fill(0);
        const std::uint64_t* above = table_.data() + static_cast<std::size_t>(y) * stride;
        std::uint64_t* cur = table_.data() + static_cast<std::size_t>(y + 1) * stride;
        for (int i = 0; i < kLowLevelCount; ++i) {
            const double sc = scale(i);
            const float* src = ll.plane(i).data() + static_cast<std::size_t>(y) * width_;
            for (int x = 0; x < width_; ++x) {
                const double v = static_cast<double>(src[x]) * sc;
                if (!(std::fabs(v) <= static_cast<double>(kFixedLimit))) {
                    throw InvalidInput("cov_integrals: feature value outside the fixed-point range");
                }
                fixed[static_cast<std::size_t>(x) * kLowLevelCount + i] = static_cast<std::int64_t>(std::floor(v + 0.5));
            }
        }
        for (int x = 0; x < width_; ++x) {
            for (int i = 0; i < kLowLevelCount; ++i) q[i] = fixed[static_cast<std::size_t>(x) * kLowLevelCount + i];
            int s = 0;
            for (int i = 0; i < kLowLevelCount; ++i) row[s++] += static_cast<std::uint64_t>(q[i]);
            for (int i = 0; i < kLowLevelCount; ++i) {
                for (int j = i; j < kLowLevelCount; ++j) row[s++] += static_cast<std::uint64_t>(q[i] * q[j]);
            }
            const std::size_t off = static_cast<std::size_t>(x + 1) * kSlots;
            for (int k = 0; k < kSlots; ++k) cur[off + k] = above[off + k] + row[k];
        }
    }
}

void CovIntegrals::check(const Rect& r) const {
    if (r.w < 1 || r.h < 1 || r.x < 0 || r.y < 0 || r.x + r.w > width_ || r.y + r.h > height_) {
        throw BoundsError("CovIntegrals: rectangle outside image");
    }
}

std::int64_t CovIntegrals::corner_sum(int slot, const Rect& r) const {
    const std::size_t stride = static_cast<std::size_t>(width_ + 1) * kSlots;
    auto at = [&](int row, int col) { return table_[row * stride + static_cast<std::size_t>(col) * kSlots + slot]; };
    const std::uint64_t v = at(r.y + r.h, r.x + r.w) - at(r.y, r.x + r.w) - at(r.y + r.h, r.x) + at(r.y, r.x);
    return static_cast<std::int64_t>(v);
}

std::int64_t CovIntegrals::raw_sum(int i, const Rect& r) const {
    check(r);
    return corner_sum(i, r);
}

i128 CovIntegrals::raw_product_sum(int i, int j, const Rect& r) const {
    std::array<std::int64_t, kLowLevelCount> sums{};
    std::array<i128, kCovPairs> products{};
    rect_moments(r, sums, products);
    return products[cov_pair_index(i, j)];
}

void CovIntegrals::block_moments(const Rect& r, std::span<std::int64_t, kLowLevelCount> sums,
                                 std::span<i128, kCovPairs> products) const {
    const std::size_t stride = static_cast<std::size_t>(width_ + 1) * kSlots;
    const std::uint64_t* a = table_.data() + (r.y + r.h) * stride + static_cast<std::size_t>(r.x + r.w) * kSlots;
    const std::uint64_t* b = table_.data() + r.y * stride + static_cast<std::size_t>(r.x + r.w) * kSlots;
    const std::uint64_t* c = table_.data() + (r.y + r.h) * stride + static_cast<std::size_t>(r.x) * kSlots;
    const std::uint64_t* d = table_.data() + r.y * stride + static_cast<std::size_t>(r.x) * kSlots;
    for (int k = 0; k < kLowLevelCount; ++k) sums[k] += static_cast<std::int64_t>(a[k] - b[k] - c[k] + d[k]);
    for (int k = 0; k < kCovPairs; ++k) {
        const int s = kLowLevelCount + k;
        products[k] += static_cast<std::int64_t>(a[s] - b[s] - c[s] + d[s]);
    }
}

void CovIntegrals::rect_moments(const Rect& r, std::span<std::int64_t, kLowLevelCount> sums,
                                std::span<i128, kCovPairs> products) const {
    check(r);
    std::fill(sums.begin(), sums.end(), 0);
    std::fill(products.begin(), products.end(), 0);
    if (static_cast<std::int64_t>(r.w) * r.h <= kExactArea) {
        block_moments(r, sums, products);
        return;
    }
    // Large rectangles: exact blocks accumulated in 128 bits.
    const int bw = static_cast<int>(std::min<std::int64_t>(r.w, kExactArea));
    const int bh = static_cast<int>(std::max<std::int64_t>(1, kExactArea / bw));
    for (int y = r.y; y < r.y + r.h; y += bh) {
        for (int x = r.x; x < r.x + r.w; x += bw) {
            block_moments({x, y, std::min(bw, r.x + r.w - x), std::min(bh, r.y + r.h - y)}, sums, products);
        }
    }
}

CovIntegrals cov_integrals(const RasterImage& lowlevel) { return CovIntegrals(lowlevel); }

// ---------------------------------------------------------------------------
// Patch statistics

double PatchStats::correlation(int i, int j) const {
    if (i == j) return var[i] > 0.0 ? 1.0 : 0.0;
    if (i > j) std::swap(i, j);
    // Strict upper triangle index.
    const int k = i * (kLowLevelCount - 1) - i * (i - 1) / 2 + (j - i - 1);
    return corr[k];
}

namespace {

// Correctly rounded; the 64-bit path is the common case.
double to_double(i128 v) {
    const auto lo64 = static_cast<std::int64_t>(v);
    if (static_cast<i128>(lo64) == v) return static_cast<double>(lo64);
    return static_cast<double>(v);
}

PatchStats stats_from_moments(std::int64_t n, std::span<const std::int64_t, kLowLevelCount> sums,
                              std::span<const i128, kCovPairs> products) {
    // Centred moment numerators n*S_ij - S_i*S_j are exact in 128-bit arithmetic.
    std::array<double, kCovPairs> num{};
    int k = 0;
    for (int i = 0; i < kLowLevelCount; ++i) {
        for (int j = i; j < kLowLevelCount; ++j, ++k) {
            num[k] = to_double(static_cast<i128>(n) * products[k] - static_cast<i128>(sums[i]) * sums[j]);
        }
    }
    PatchStats out;
    std::array<double, kLowLevelCount> inv_root{};
    const double n2 = static_cast<double>(n) * static_cast<double>(n);
    for (int i = 0; i < kLowLevelCount; ++i) {
        const double d = std::max(0.0, num[cov_pair_index(i, i)]);
        const double s = CovIntegrals::scale(i);
        out.var[i] = d / (n2 * s * s);
        inv_root[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
    }
    int c = 0;
    k = 0;
    for (int i = 0; i < kLowLevelCount; ++i) {
        ++k;  // skip the diagonal entry
        for (int j = i + 1; j < kLowLevelCount; ++j, ++c, ++k) {
            out.corr[c] = std::clamp(num[k] * inv_root[i] * inv_root[j], -1.0, 1.0);
        }
    }
    return out;
}

}  // namespace

PatchStats patch_stats(const CovIntegrals& ci, const Rect& patch) {
    std::array<std::int64_t, kLowLevelCount> sums{};
    std::array<i128, kCovPairs> products{};
    ci.rect_moments(patch, sums, products);
    return stats_from_moments(static_cast<std::int64_t>(patch.w) * patch.h, sums, products);
}

std::array<float, kCovVectorSize> cov_vector(const PatchStats& s) {
    std::array<float, kCovVectorSize> v{};
    int k = 0;
    for (int i = kAbsIx; i < kLowLevelCount; ++i) v[k++] = static_cast<float>(s.var[i]);
    int c = 0;
    for (int i = 0; i < kLowLevelCount; ++i) {
        for (int j = i + 1; j < kLowLevelCount; ++j, ++c) {
            if (i == kPosX && j == kPosY) continue;
            v[k++] = static_cast<float>(s.corr[c]);
        }
    }
    return v;
}

namespace {

std::vector<std::string> cov_vector_names(int patch) {
    const auto& ln = lowlevel_names();
    const std::string prefix = "cov" + std::to_string(patch) + ":";
    std::vector<std::string> names;
    for (int i = kAbsIx; i < kLowLevelCount; ++i) names.push_back(prefix + "var" + ln[i]);
    for (int i = 0; i < kLowLevelCount; ++i) {
        for (int j = i + 1; j < kLowLevelCount; ++j) {
            if (i == kPosX && j == kPosY) continue;
            names.push_back(prefix + "corr(" + ln[i] + "," + ln[j] + ")");
        }
    }
    return names;
}

// Inclusive range of pooling cells along one axis whose region contains position p.
std::pair<int, int> cells_containing(int p, const PoolConfig& cfg, int grid) {
    const int hi = std::min(p / cfg.pool_stride, grid - 1);
    const int num = p - cfg.pool_region + 1;
    const int lo = num <= 0 ? 0 : (num + cfg.pool_stride - 1) / cfg.pool_stride;
    return {lo, hi};
}

void validate(const PoolConfig& cfg) {
    if (cfg.patch_sizes.empty() || cfg.patch_stride < 1 || cfg.pool_region < 1 || cfg.pool_stride < 1) {
        throw InvalidInput("PoolConfig: invalid geometry");
    }
    for (int s : cfg.patch_sizes) {
        if (s < 1) throw InvalidInput("PoolConfig: patch size must be >= 1");
    }
}

}  // namespace

ChannelStack pooled_covariance(const CovIntegrals& ci, const PoolConfig& cfg) {
    validate(cfg);
    const int gw = ci.width() / cfg.pool_stride, gh = ci.height() / cfg.pool_stride;
    if (gw < 1 || gh < 1) throw InvalidInput("pooled_covariance: image smaller than one pooling cell");
    ChannelStack out(gw, gh);
    const std::size_t cells = out.plane_size();

    for (int patch : cfg.patch_sizes) {
        const auto names = cov_vector_names(patch);
        const int first = out.count();
        for (const auto& n : names) out.add_plane(n);
        if (patch > ci.width() || patch > ci.height()) {
            out.add_warning("image smaller than " + std::to_string(patch) + "px patches; planes zeroed");
            continue;
        }

        std::vector<float> best(cells * kCovVectorSize, -std::numeric_limits<float>::infinity());
        std::vector<char> seen(cells, 0);
        for (int py = 0; py + patch <= ci.height(); py += cfg.patch_stride) {
            const auto [cy0, cy1] = cells_containing(py, cfg, gh);
            if (cy0 > cy1) continue;
            for (int px = 0; px + patch <= ci.width(); px += cfg.patch_stride) {
                const auto [cx0, cx1] = cells_containing(px, cfg, gw);
                if (cx0 > cx1) continue;
                const auto v = cov_vector(patch_stats(ci, Rect{px, py, patch, patch}));
                for (int cy = cy0; cy <= cy1; ++cy) {
                    for (int cx = cx0; cx <= cx1; ++cx) {
                        const std::size_t cell = static_cast<std::size_t>(cy) * gw + cx;
                        seen[cell] = 1;
                        float* b = best.data() + cell * kCovVectorSize;
                        for (int k = 0; k < kCovVectorSize; ++k) b[k] = std::max(b[k], v[k]);
                    }
                }
            }
        }
        for (int k = 0; k < kCovVectorSize; ++k) {
            auto plane = out.plane(first + k);
            for (std::size_t cell = 0; cell < cells; ++cell) {
                plane[cell] = seen[cell] ? best[cell * kCovVectorSize + k] : 0.0f;
            }
        }
    }
    return out;
}

namespace {

void append_planes(ChannelStack& dst, const RasterImage& src, int first, int count,
                   const std::vector<std::string>& names) {
    for (int p = 0; p < count; ++p) {
        auto d = dst.add_plane(names[p]);
        auto s = src.plane(first + p);
        std::copy(s.begin(), s.end(), d.begin());
    }
}

ChannelStack sp_cov_from(const RasterImage& luv, const RasterImage& lum, const PoolConfig& cfg) {
    const RasterImage ll = lowlevel9(lum);
    ChannelStack out = pooled_covariance(CovIntegrals(ll), cfg);

    const RasterImage raw = aggregate(ll, 4, AggregateMode::Mean);
    if (raw.width() != out.grid_w() || raw.height() != out.grid_h()) {
        throw InvalidInput("sp_cov_stack: pooling stride must equal the 4px channel cell");
    }
    std::vector<std::string> raw_names;
    for (int i = kAbsIx; i < kLowLevelCount; ++i) raw_names.emplace_back(lowlevel_names()[i]);
    append_planes(out, raw, kAbsIx, kLowLevelCount - kAbsIx, raw_names);

    const RasterImage luv_cells = aggregate(luv, 4, AggregateMode::Mean);
    append_planes(out, luv_cells, 0, 3, {"L", "U", "V"});
    return out;
}

std::vector<std::uint8_t> patch_code_counts(const LbpCodeMap& codes, int patch) {
    // counts[k][py][px] for every fully contained patch position; other entries 0.
    const int w = codes.width, h = codes.height;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<std::uint8_t> counts(n * kUniformCodes, 0);
    if (patch > w || patch > h) return counts;
    std::vector<std::uint8_t> rows(n * kUniformCodes, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x + patch <= w; ++x) {
            for (int dx = 0; dx < patch; ++dx) {
                const std::uint8_t c = codes.at(x + dx, y);
                if (c != kLbpSentinel) ++rows[c * n + static_cast<std::size_t>(y) * w + x];
            }
        }
    }
    for (int k = 0; k < kUniformCodes; ++k) {
        const std::uint8_t* r = rows.data() + k * n;
        std::uint8_t* out = counts.data() + k * n;
        for (int y = 0; y + patch <= h; ++y) {
            for (int x = 0; x + patch <= w; ++x) {
                int acc = 0;
                for (int dy = 0; dy < patch; ++dy) acc += r[static_cast<std::size_t>(y + dy) * w + x];
                out[static_cast<std::size_t>(y) * w + x] = static_cast<std::uint8_t>(acc);
            }
        }
    }
    return counts;
}

}  // namespace

ChannelStack sp_cov_stack(const RasterImage& rgb, const PoolConfig& cfg) {
    const RasterImage luv = rgb_to_luv(rgb);
    return sp_cov_from(luv, luminance(luv), cfg);
}

ChannelStack lbp_cell_stack(const RasterImage& lum) {
    const LbpCodeMap codes = lbp_codes(lum);
    const int gw = codes.width / 4, gh = codes.height / 4;
    if (gw < 1 || gh < 1) throw InvalidInput("lbp_cell_stack: image smaller than one cell");
    ChannelStack out(gw, gh);
    for (int k = 0; k < kUniformCodes; ++k) out.add_plane("LBP" + std::to_string(k));
    for (int cy = 0; cy < gh; ++cy) {
        for (int cx = 0; cx < gw; ++cx) {
            for (int y = cy * 4; y < cy * 4 + 4; ++y) {
                for (int x = cx * 4; x < cx * 4 + 4; ++x) {
                    const std::uint8_t c = codes.at(x, y);
                    if (c != kLbpSentinel) out.plane(c)[static_cast<std::size_t>(cy) * gw + cx] += 1.0f;
                }
            }
        }
    }
    return out;
}

ChannelStack sp_lbp_stack(const RasterImage& lum, const PoolConfig& cfg) {
    validate(cfg);
    if (cfg.patch_sizes.size() != 1) throw InvalidInput("sp_lbp_stack: exactly one patch size supported");
    const int patch = cfg.patch_sizes.front();
    const LbpCodeMap codes = lbp_codes(lum);
    const int w = codes.width, h = codes.height;
    const int gw = w / cfg.pool_stride, gh = h / cfg.pool_stride;
    if (gw < 1 || gh < 1) throw InvalidInput("sp_lbp_stack: image smaller than one pooling cell");
    if (gw != w / 4 || gh != h / 4) throw InvalidInput("sp_lbp_stack: pooling stride must equal the 4px cell");

    const auto counts = patch_code_counts(codes, patch);
    const std::size_t n = static_cast<std::size_t>(w) * h;
    ChannelStack out(gw, gh);
    for (int k = 0; k < kUniformCodes; ++k) {
        auto plane = out.add_plane("spLBP" + std::to_string(k));
        const std::uint8_t* ck = counts.data() + k * n;
        for (int cy = 0; cy < gh; ++cy) {
            for (int cx = 0; cx < gw; ++cx) {
                int best = -1;
                const int y0 = cy * cfg.pool_stride, x0 = cx * cfg.pool_stride;
                for (int py = y0; py < y0 + cfg.pool_region && py + patch <= h; ++py) {
                    if (py % cfg.patch_stride != 0) continue;
                    for (int px = x0; px < x0 + cfg.pool_region && px + patch <= w; ++px) {
                        if (px % cfg.patch_stride != 0) continue;
                        best = std::max(best, static_cast<int>(ck[static_cast<std::size_t>(py) * w + px]));
                    }
                }
                plane[static_cast<std::size_t>(cy) * gw + cx] = best < 0 ? 0.0f : static_cast<float>(best);
            }
        }
    }
    out.append(lbp_cell_stack(lum));
    return out;
}

// ---------------------------------------------------------------------------
// Configurations

ChannelConfig parse_channel_config(std::string_view name) {
    if (name == "M+O+LUV+LBP") return ChannelConfig::AcfLbp;
    if (name == "sp-Cov+LUV") return ChannelConfig::SpCovLuv;
    if (name == "sp-Cov+M+O+LUV") return ChannelConfig::SpCovAcf;
    if (name == "sp-Cov+sp-LBP+M+O+LUV") return ChannelConfig::SpCovSpLbpAcf;
    throw InvalidInput("unknown channel configuration '" + std::string(name) + "'");
}

std::string_view channel_config_name(ChannelConfig cfg) {
    switch (cfg) {
        case ChannelConfig::AcfLbp: return "M+O+LUV+LBP";
        case ChannelConfig::SpCovLuv: return "sp-Cov+LUV";
        case ChannelConfig::SpCovAcf: return "sp-Cov+M+O+LUV";
        case ChannelConfig::SpCovSpLbpAcf: return "sp-Cov+sp-LBP+M+O+LUV";
    }
    return "";
}

int channel_count(ChannelConfig cfg) {
    switch (cfg) {
        case ChannelConfig::AcfLbp: return 10 + kUniformCodes;
        case ChannelConfig::SpCovLuv: return 136;
        case ChannelConfig::SpCovAcf: return 143;
        case ChannelConfig::SpCovSpLbpAcf: return 259;
    }
    return 0;
}

ChannelStack assemble(const RasterImage& rgb, ChannelConfig cfg) {
    const RasterImage luv = rgb_to_luv(rgb);
    const RasterImage lum = luminance(luv);

    auto mo_only = [&] {
        const ChannelStack acf = acf_channels(luv);
        // Drop L, U, V (planes 0..2) and keep M, O0..O5.
        ChannelStack out(acf.grid_w(), acf.grid_h());
        for (int c = 3; c < acf.count(); ++c) {
            auto d = out.add_plane(acf.names()[c]);
            auto s = acf.plane(c);
            std::copy(s.begin(), s.end(), d.begin());
        }
        return out;
    };

    ChannelStack out;
    switch (cfg) {
        case ChannelConfig::AcfLbp:
            out = acf_channels(luv);
            out.append(lbp_cell_stack(lum));
            break;
        case ChannelConfig::SpCovLuv:
            out = sp_cov_from(luv, lum, PoolConfig::sp_cov());
            break;
        case ChannelConfig::SpCovAcf:
            out = sp_cov_from(luv, lum, PoolConfig::sp_cov());
            out.append(mo_only());
            break;
        case ChannelConfig::SpCovSpLbpAcf:
            out = sp_cov_from(luv, lum, PoolConfig::sp_cov());
            out.append(mo_only());
            out.append(sp_lbp_stack(lum));
            break;
    }
    return out;
}

ChannelStack assemble(const RasterImage& rgb, std::string_view config_name) {
    return assemble(rgb, parse_channel_config(config_name));
}

std::vector<float> window_channels(const RasterImage& rgb, int x0, int y0, int window_w, int window_h,
                                   ChannelConfig cfg) {
    if (window_w % 4 != 0 || window_h % 4 != 0 || window_w < 4 || window_h < 4) {
        throw InvalidInput("window_channels: window dims must be positive multiples of 4");
    }
    if (x0 < 0 || y0 < 0 || x0 + window_w > rgb.width() || y0 + window_h > rgb.height()) {
        throw BoundsError("window_channels: window outside image");
    }
    const int lead_x = x0 >= kContextLead ? kContextLead : 0;
    const int lead_y = y0 >= kContextLead ? kContextLead : 0;
    const int right = std::min(rgb.width(), x0 + window_w + kContextTrail);
    const int bottom = std::min(rgb.height(), y0 + window_h + kContextTrail);
    const Rect ctx{x0 - lead_x, y0 - lead_y, right - (x0 - lead_x), bottom - (y0 - lead_y)};
    const ChannelStack stack = assemble(crop(rgb, ctx), cfg);
    return stack.window_features(lead_x / 4, lead_y / 4, window_w / 4, window_h / 4);
}

}  // namespace spdet
