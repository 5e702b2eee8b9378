#include <algorithm>

#include "spdet/boost.hpp"
#include "spdet/errors.hpp"

namespace spdet {

void RawSamples::push(std::span<const float> v) {
    if (dim == 0) dim = v.size();
    if (v.size() != dim) throw InvalidInput("RawSamples::push: dimension mismatch");
    values.insert(values.end(), v.begin(), v.end());
}

void RawSamples::append(const RawSamples& other) {
    if (other.count() == 0) return;
    if (dim == 0) dim = other.dim;
    if (other.dim != dim) throw InvalidInput("RawSamples::append: dimension mismatch");
    values.insert(values.end(), other.values.begin(), other.values.end());
}

QuantTable fit_quantizer(const RawSamples& samples) { return fit_quantizer(samples, RawSamples(samples.dim)); }

QuantTable fit_quantizer(const RawSamples& a, const RawSamples& b) {
    if (a.count() + b.count() == 0) throw InvalidInput("fit_quantizer: empty sample set");
    if (a.count() > 0 && b.count() > 0 && a.dim != b.dim) throw InvalidInput("fit_quantizer: dimension mismatch");
    const RawSamples& first_set = a.count() > 0 ? a : b;
    QuantTable t;
    auto first = first_set.row(0);
    t.lo.assign(first.begin(), first.end());
    t.hi.assign(first.begin(), first.end());
    for (const RawSamples* s : {&a, &b}) {
        for (std::size_t i = 0; i < s->count(); ++i) {
            auto r = s->row(i);
            for (std::size_t f = 0; f < s->dim; ++f) {
                t.lo[f] = std::min(t.lo[f], r[f]);
                t.hi[f] = std::max(t.hi[f], r[f]);
            }
        }
    }
    return t;
}

std::vector<std::uint8_t> quantize(const QuantTable& table, const RawSamples& samples) {
    if (samples.count() > 0 && samples.dim != table.dim()) throw InvalidInput("quantize: dimension mismatch");
    std::vector<std::uint8_t> out(samples.values.size());
    for (std::size_t i = 0; i < samples.count(); ++i) {
        auto r = samples.row(i);
        for (std::size_t f = 0; f < samples.dim; ++f) out[i * samples.dim + f] = table.bin(f, r[f]);
    }
    return out;
}

TrainSet::TrainSet(const QuantTable& table, const RawSamples& pos, const RawSamples& neg) {
    if (pos.count() == 0 || neg.count() == 0) throw InvalidInput("TrainSet: both classes must be nonempty");
    if (pos.dim != table.dim() || neg.dim != table.dim()) throw InvalidInput("TrainSet: dimension mismatch");
    dim_ = table.dim();
    const std::size_t n = pos.count() + neg.count();
    labels_.assign(pos.count(), 1);
    labels_.resize(n, -1);
    bins_.resize(dim_ * n);
    auto fill = [&](const RawSamples& s, std::size_t offset) {
        for (std::size_t i = 0; i < s.count(); ++i) {
            auto r = s.row(i);
            for (std::size_t f = 0; f < dim_; ++f) bins_[f * n + offset + i] = table.bin(f, r[f]);
        }
    };
    fill(pos, 0);
    fill(neg, pos.count());
}

TrainSet TrainSet::from_bins(std::size_t dim, std::span<const std::uint8_t> rows,
                             std::span<const std::int8_t> labels) {
    if (rows.size() != dim * labels.size()) throw InvalidInput("TrainSet::from_bins: size mismatch");
    TrainSet t;
    t.dim_ = dim;
    t.labels_.assign(labels.begin(), labels.end());
    const std::size_t n = labels.size();
    t.bins_.resize(dim * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < dim; ++f) t.bins_[f * n + i] = rows[i * dim + f];
    }
    return t;
}

}  // namespace spdet
