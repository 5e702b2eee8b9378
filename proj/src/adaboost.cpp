#include <algorithm>
#include <cmath>

#include "spdet/boost.hpp"
#include "spdet/errors.hpp"

namespace spdet {

namespace {
constexpr double kEpsFloor = 1e-6;
constexpr double kEpsCeil = 0.5 - 1e-6;
}  // namespace

double adaboost_coefficient(double epsilon) {
    const double e = std::clamp(epsilon, kEpsFloor, kEpsCeil);
    return 0.5 * std::log((1.0 - e) / e);
}

void BoostedModel::set_cascade(double base_threshold) { cascade.assign(trees.size(), base_threshold * shrinkage); }

WindowScore score_window(const BoostedModel& model, std::span<const std::uint8_t> bins) {
    if (bins.size() != model.dim()) throw InvalidInput("score_window: feature length mismatch");
    return score_window_with(model, [&](std::uint32_t f) { return bins[f]; });
}

WindowScore score_raw_window(const BoostedModel& model, std::span<const float> features) {
    if (features.size() != model.dim()) throw InvalidInput("score_raw_window: feature length mismatch");
    return score_window_with(model, [&](std::uint32_t f) { return model.quant.bin(f, features[f]); });
}

AdaBoostResult adaboost(const TrainSet& data, const AdaBoostOptions& opts) {
    if (opts.trees < 1) throw InvalidInput("adaboost: need at least one round");
    if (!(opts.shrinkage > 0.0 && opts.shrinkage <= 1.0)) throw InvalidInput("adaboost: shrinkage must be in (0, 1]");
    const std::size_t m = data.size();
    if (m == 0) throw InvalidInput("adaboost: empty training set");
    bool has_pos = false, has_neg = false;
    for (auto y : data.labels()) (y > 0 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw InvalidInput("adaboost: both classes must be present");

    AdaBoostResult out;
    std::vector<double> w(m, 1.0 / static_cast<double>(m));
    std::vector<double> score(m, 0.0);
    std::vector<std::int8_t> h(m);

    for (int t = 0; t < opts.trees; ++t) {
        TreeFit fit = train_tree(data, w, opts.depth);
        if (fit.error >= kEpsCeil) {
            out.early_stopped = true;
            out.warnings.push_back("round " + std::to_string(t) + ": weak learner error " +
                                   std::to_string(fit.error) + " >= 0.5; stopping early");
            break;
        }
        const double omega = adaboost_coefficient(fit.error);
        const double step = opts.shrinkage * omega;

        for (std::size_t i = 0; i < m; ++i) {
            h[i] = fit.tree.predict([&](std::uint32_t f) { return data.bin(i, f); });
        }
        double total = 0.0, loss = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double margin = static_cast<double>(data.label(i)) * h[i];
            w[i] *= std::exp(-step * margin);
            total += w[i];
            score[i] += step * h[i];
            loss += std::exp(-static_cast<double>(data.label(i)) * score[i]);
        }
        for (double& v : w) v /= total;

        out.trees.push_back(std::move(fit.tree));
        out.omega.push_back(omega);
        out.errors.push_back(fit.error);
        out.loss.push_back(loss / static_cast<double>(m));
    }
    return out;
}

BoostedModel make_model(AdaBoostResult&& fit, QuantTable quant, const AdaBoostOptions& opts, int window_w,
                        int window_h, ChannelConfig channels) {
    BoostedModel model;
    model.window_w = window_w;
    model.window_h = window_h;
    model.channels = channels;
    model.quant = std::move(quant);
    model.shrinkage = opts.shrinkage;
    model.trees = std::move(fit.trees);
    model.omega = std::move(fit.omega);
    model.set_cascade(opts.cascade_threshold);
    return model;
}

}  // namespace spdet
