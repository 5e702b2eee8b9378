#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "spdet/pooling.hpp"

namespace spdet {

/// Row-major float feature vectors, one row per sample.
struct RawSamples {
    std::size_t dim = 0;
    std::vector<float> values;

    RawSamples() = default;
    explicit RawSamples(std::size_t d) : dim(d) {}

    std::size_t count() const { return dim == 0 ? 0 : values.size() / dim; }
    std::span<const float> row(std::size_t i) const { return std::span<const float>(values).subspan(i * dim, dim); }
    void push(std::span<const float> v);
    void append(const RawSamples& other);
};

/// Linear 256-bin quantizer with per-feature bounds.
struct QuantTable {
    std::vector<float> lo;
    std::vector<float> hi;

    std::size_t dim() const { return lo.size(); }
    bool operator==(const QuantTable&) const = default;

    std::uint8_t bin(std::size_t f, float v) const {
        const double l = lo[f], h = hi[f];
        if (!(h > l)) return 0;
        double t = (static_cast<double>(v) - l) / (h - l);
        if (!(t > 0.0)) return 0;
        if (t >= 1.0) return 255;
        return static_cast<std::uint8_t>(255.0 * t);
    }
};

QuantTable fit_quantizer(const RawSamples& samples);
/// Bounds over the union of two sample sets.
QuantTable fit_quantizer(const RawSamples& a, const RawSamples& b);

/// Quantized training data, stored feature-major for the split search.
class TrainSet {
public:
    TrainSet() = default;
    TrainSet(const QuantTable& table, const RawSamples& pos, const RawSamples& neg);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return labels_.size(); }
    const std::vector<std::int8_t>& labels() const { return labels_; }
    std::int8_t label(std::size_t i) const { return labels_[i]; }

    std::uint8_t bin(std::size_t sample, std::size_t feature) const { return bins_[feature * size() + sample]; }
    std::span<const std::uint8_t> feature_row(std::size_t feature) const {
        return std::span<const std::uint8_t>(bins_).subspan(feature * size(), size());
    }

    /// Builds directly from already-quantized sample-major rows (tests, small tools).
    static TrainSet from_bins(std::size_t dim, std::span<const std::uint8_t> rows, std::span<const std::int8_t> labels);

private:
    std::size_t dim_ = 0;
    std::vector<std::int8_t> labels_;
    std::vector<std::uint8_t> bins_;
};

/// Sample-major 8-bit matrix of a set (the matrix form of a TrainSet).
std::vector<std::uint8_t> quantize(const QuantTable& table, const RawSamples& samples);

inline constexpr int kMaxTreeDepth = 4;

/// Complete binary tree: node k has children 2k+1 and 2k+2; a sample goes left
/// iff its bin <= threshold. Leaves are indexed left to right.
struct DecisionTree {
    int depth = 1;
    std::vector<std::uint32_t> feature;   // 2^depth - 1
    std::vector<std::uint8_t> threshold;  // 2^depth - 1
    std::vector<std::int8_t> leaf;        // 2^depth, values +-1

    template <class BinFn>
        requires std::invocable<BinFn&, std::uint32_t>
    std::int8_t predict(BinFn&& bin_of) const {
        std::size_t k = 0;
        const std::size_t internal = feature.size();
        while (k < internal) k = bin_of(feature[k]) <= threshold[k] ? 2 * k + 1 : 2 * k + 2;
        return leaf[k - internal];
    }

    std::int8_t predict(std::span<const std::uint8_t> bins) const {
        return predict([&](std::uint32_t f) { return bins[f]; });
    }

    bool operator==(const DecisionTree&) const = default;
};

struct TreeFit {
    DecisionTree tree;
    double error = 0.0;  // weighted training error, weights normalised to sum 1
};

/// Greedy top-down tree growth over weighted 256-bin label histograms.
TreeFit train_tree(const TrainSet& data, std::span<const double> weights, int depth);

/// Best single split (depth-1 tree) by exhaustive search; same tie-breaks as train_tree.
TreeFit best_stump(const TrainSet& data, std::span<const double> weights);

struct BoostedModel {
    static constexpr int kFormatVersion = 1;

    int window_w = 64;
    int window_h = 128;
    ChannelConfig channels = ChannelConfig::SpCovSpLbpAcf;
    QuantTable quant;
    double shrinkage = 0.1;
    std::vector<DecisionTree> trees;
    std::vector<double> omega;
    std::vector<double> cascade;  // per-tree reject threshold on the partial score

    int grid_w() const { return window_w / 4; }
    int grid_h() const { return window_h / 4; }
    /// Feature vector length the trees index into.
    std::size_t dim() const { return quant.dim(); }
    /// Feature length implied by the window geometry and channel configuration.
    std::size_t window_dim() const {
        return static_cast<std::size_t>(channel_count(channels)) * grid_w() * grid_h();
    }
    std::size_t size() const { return trees.size(); }

    /// nu * omega_t: the effective coefficient of tree t in the score.
    double coefficient(std::size_t t) const { return shrinkage * omega[t]; }

    void set_cascade(double base_threshold);
    void disable_cascade() { cascade.assign(trees.size(), -std::numeric_limits<double>::infinity()); }

    bool operator==(const BoostedModel&) const = default;
};

struct WindowScore {
    double score = 0.0;
    bool passed = true;
    int trees_evaluated = 0;
};

/// Sequential soft-cascade evaluation over a bin accessor.
template <class BinFn>
WindowScore score_window_with(const BoostedModel& model, BinFn&& bin_of) {
    WindowScore out;
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        out.score += model.coefficient(t) * model.trees[t].predict(bin_of);
        out.trees_evaluated = static_cast<int>(t) + 1;
        if (out.score < model.cascade[t]) {
            out.passed = false;
            return out;
        }
    }
    return out;
}

WindowScore score_window(const BoostedModel& model, std::span<const std::uint8_t> bins);

/// Quantizes raw window features on demand and scores them.
WindowScore score_raw_window(const BoostedModel& model, std::span<const float> features);

struct AdaBoostOptions {
    int trees = 2048;
    double shrinkage = 0.1;
    int depth = 3;
    double cascade_threshold = -10.0;  // scaled by shrinkage when stored
};

struct AdaBoostResult {
    std::vector<DecisionTree> trees;
    std::vector<double> omega;
    std::vector<double> errors;  // epsilon_t of each accepted round
    std::vector<double> loss;    // (1/m) sum exp(-y F_t) after each accepted round
    bool early_stopped = false;
    std::vector<std::string> warnings;
};

/// AdaBoost coefficient with epsilon clamped to [1e-6, 0.5 - 1e-6].
double adaboost_coefficient(double epsilon);

/// Discrete AdaBoost with shrinkage applied to both the score and the reweighting.
AdaBoostResult adaboost(const TrainSet& data, const AdaBoostOptions& opts);

/// Packs an AdaBoost result with its quantizer into a model.
BoostedModel make_model(AdaBoostResult&& fit, QuantTable quant, const AdaBoostOptions& opts, int window_w,
                        int window_h, ChannelConfig channels);

}  // namespace spdet
