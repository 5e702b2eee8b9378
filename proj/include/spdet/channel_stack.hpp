#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace spdet {

/// Named feature planes on the 1/4-resolution channel grid. Plane-major storage.
class ChannelStack {
public:
    ChannelStack() = default;
    ChannelStack(int grid_w, int grid_h) : grid_w_(grid_w), grid_h_(grid_h) {}

    int grid_w() const { return grid_w_; }
    int grid_h() const { return grid_h_; }
    int count() const { return static_cast<int>(names_.size()); }
    std::size_t plane_size() const { return static_cast<std::size_t>(grid_w_) * grid_h_; }

    const std::vector<std::string>& names() const { return names_; }
    const std::vector<std::string>& warnings() const { return warnings_; }
    void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

    /// Appends a zero-initialised plane and returns a view of it.
    std::span<float> add_plane(std::string name);

    /// Appends every plane of `other`; grid dims must match.
    void append(const ChannelStack& other);

    std::span<float> plane(int c);
    std::span<const float> plane(int c) const;

    float at(int c, int x, int y) const {
        return data_[(static_cast<std::size_t>(c) * grid_h_ + y) * grid_w_ + x];
    }
    std::span<const float> data() const { return data_; }

    /// Flattened window features (channel, row, column order) for the gw x gh
    /// window whose top-left cell is (cx, cy).
    void window_features(int cx, int cy, int gw, int gh, std::span<float> out) const;
    std::vector<float> window_features(int cx, int cy, int gw, int gh) const;

    /// Sub-grid copy with the same plane names.
    ChannelStack crop(int cx, int cy, int gw, int gh) const;

private:
    int grid_w_ = 0;
    int grid_h_ = 0;
    std::vector<std::string> names_;
    std::vector<std::string> warnings_;
    std::vector<float> data_;
};

}  // namespace spdet
