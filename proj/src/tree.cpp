#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "spdet/boost.hpp"
#include "spdet/errors.hpp"
#include "spdet/parallel.hpp"

namespace spdet {

namespace {

struct Split {
    double error = std::numeric_limits<double>::infinity();
    std::uint32_t feature = 0;
    std::uint8_t threshold = 255;
};

// Node sample set, split by class so histogram loops carry no label branch.
struct NodeSamples {
    std::vector<std::uint32_t> pos;
    std::vector<std::uint32_t> neg;
    double wpos = 0.0;
    double wneg = 0.0;
};

Split search_feature_range(const TrainSet& data, std::span<const double> w, const NodeSamples& node,
                           std::size_t begin, std::size_t end) {
    Split best;
    std::array<double, 256> hp{}, hn{};
    for (std::size_t f = begin; f < end; ++f) {
        hp.fill(0.0);
        hn.fill(0.0);
        const std::uint8_t* row = data.feature_row(f).data();
        for (std::uint32_t i : node.pos) hp[row[i]] += w[i];
        for (std::uint32_t i : node.neg) hn[row[i]] += w[i];
        double lp = 0.0, ln = 0.0;
        for (int t = 0; t < 256; ++t) {
            lp += hp[t];
            ln += hn[t];
            const double e = std::min(lp, ln) + std::min(node.wpos - lp, node.wneg - ln);
            if (e < best.error) {
                best.error = e;
                best.feature = static_cast<std::uint32_t>(f);
                best.threshold = static_cast<std::uint8_t>(t);
            }
        }
    }
    return best;
}

Split best_split(const TrainSet& data, std::span<const double> w, const NodeSamples& node) {
    const std::size_t d = data.dim();
    std::vector<Split> partial(thread_count());
    parallel_chunks(d, [&](std::size_t b, std::size_t e, int worker) {
        partial[worker] = search_feature_range(data, w, node, b, e);
    });
    Split best;
    // Chunks are in feature order; strict < keeps the lowest index on ties.
    for (const auto& s : partial) {
        if (s.error < best.error) best = s;
    }
    return best;
}

std::int8_t majority(double wpos, double wneg) { return wpos >= wneg ? 1 : -1; }

}  // namespace

TreeFit train_tree(const TrainSet& data, std::span<const double> weights, int depth) {
    if (depth < 1 || depth > kMaxTreeDepth) throw InvalidInput("train_tree: depth must be in [1, 4]");
    if (weights.size() != data.size()) throw InvalidInput("train_tree: weight count mismatch");
    if (data.dim() == 0 || data.size() == 0) throw InvalidInput("train_tree: empty training set");
    double total = 0.0;
    for (double v : weights) {
        if (!(v >= 0.0)) throw InvalidInput("train_tree: weights must be nonnegative");
        total += v;
    }
    if (!(total > 0.0)) throw InvalidInput("train_tree: weights must have positive sum");
    std::vector<double> w(weights.begin(), weights.end());
    for (double& v : w) v /= total;

    const std::size_t internal = (std::size_t{1} << depth) - 1;
    DecisionTree tree;
    tree.depth = depth;
    tree.feature.assign(internal, 0);
    tree.threshold.assign(internal, 255);
    tree.leaf.assign(internal + 1, 1);

    std::vector<NodeSamples> level(1);
    for (std::uint32_t i = 0; i < data.size(); ++i) {
        if (data.label(i) > 0) {
            level[0].pos.push_back(i);
            level[0].wpos += w[i];
        } else {
            level[0].neg.push_back(i);
            level[0].wneg += w[i];
        }
    }
    std::vector<std::int8_t> fallback(1, majority(level[0].wpos, level[0].wneg));

    std::size_t node_id = 0;
    for (int l = 0; l < depth; ++l) {
        std::vector<NodeSamples> next(level.size() * 2);
        std::vector<std::int8_t> next_fallback(level.size() * 2);
        for (std::size_t k = 0; k < level.size(); ++k, ++node_id) {
            const NodeSamples& node = level[k];
            const bool empty = node.pos.empty() && node.neg.empty();
            const std::int8_t label = empty ? fallback[k] : majority(node.wpos, node.wneg);
            next_fallback[2 * k] = next_fallback[2 * k + 1] = label;
            if (node.pos.empty() || node.neg.empty()) {
                // Pure or empty: route everything left.
                next[2 * k] = node;
                continue;
            }
            const Split s = best_split(data, w, node);
            tree.feature[node_id] = s.feature;
            tree.threshold[node_id] = s.threshold;
            NodeSamples& left = next[2 * k];
            NodeSamples& right = next[2 * k + 1];
            const auto row = data.feature_row(s.feature);
            for (std::uint32_t i : node.pos) {
                NodeSamples& dst = row[i] <= s.threshold ? left : right;
                dst.pos.push_back(i);
                dst.wpos += w[i];
            }
            for (std::uint32_t i : node.neg) {
                NodeSamples& dst = row[i] <= s.threshold ? left : right;
                dst.neg.push_back(i);
                dst.wneg += w[i];
            }
        }
        level = std::move(next);
        fallback = std::move(next_fallback);
    }

    TreeFit fit;
    for (std::size_t k = 0; k < level.size(); ++k) {
        const NodeSamples& leaf = level[k];
        const bool empty = leaf.pos.empty() && leaf.neg.empty();
        tree.leaf[k] = empty ? fallback[k] : majority(leaf.wpos, leaf.wneg);
        fit.error += tree.leaf[k] > 0 ? leaf.wneg : leaf.wpos;
    }
    fit.tree = std::move(tree);
    return fit;
}

TreeFit best_stump(const TrainSet& data, std::span<const double> weights) { return train_tree(data, weights, 1); }

}  // namespace spdet
