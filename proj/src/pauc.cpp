#include "spdet/pauc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "spdet/errors.hpp"
#include "spdet/evalkit.hpp"
#include "spdet/parallel.hpp"

namespace spdet {

void ResponseMatrix::push(std::span<const std::int8_t> h) {
    if (h.size() != dim) throw InvalidInput("ResponseMatrix::push: length mismatch");
    values.insert(values.end(), h.begin(), h.end());
}

std::vector<std::int8_t> weak_responses(const BoostedModel& model, std::span<const std::uint8_t> bins) {
    if (bins.size() != model.dim()) throw InvalidInput("weak_responses: feature length mismatch");
    std::vector<std::int8_t> h(model.trees.size());
    for (std::size_t t = 0; t < h.size(); ++t) h[t] = model.trees[t].predict(bins);
    return h;
}

std::vector<std::int8_t> weak_responses_raw(const BoostedModel& model, std::span<const float> features) {
    if (features.size() != model.dim()) throw InvalidInput("weak_responses: feature length mismatch");
    std::vector<std::int8_t> h(model.trees.size());
    for (std::size_t t = 0; t < h.size(); ++t) {
        h[t] = model.trees[t].predict([&](std::uint32_t f) { return model.quant.bin(f, features[f]); });
    }
    return h;
}

ResponseMatrix weak_responses(const BoostedModel& model, const RawSamples& samples) {
    ResponseMatrix out(model.trees.size());
    out.values.resize(samples.count() * out.dim);
    parallel_for(samples.count(), [&](std::size_t i) {
        auto h = weak_responses_raw(model, samples.row(i));
        std::copy(h.begin(), h.end(), out.values.begin() + i * out.dim);
    });
    return out;
}

PaucRange pauc_range(std::size_t n, double alpha, double beta) {
    if (n == 0) throw InvalidInput("pauc: no negatives");
    if (!(alpha >= 0.0 && alpha < beta && beta <= 1.0)) throw InvalidInput("pauc: need 0 <= alpha < beta <= 1");
    const double nd = static_cast<double>(n);
    PaucRange r;
    r.j_alpha = static_cast<std::size_t>(std::floor(alpha * nd + 1e-9));
    r.j_beta = static_cast<std::size_t>(std::ceil(beta * nd - 1e-9));
    r.j_beta = std::min(r.j_beta, n);
    if (r.j_alpha >= r.j_beta) throw InvalidInput("pauc: empty FPR range for this negative count");
    return r;
}

std::uint64_t pauc_risk(std::span<const double> pos, std::span<const double> neg, double alpha, double beta) {
    if (pos.empty() || neg.empty()) throw InvalidInput("pauc_risk: empty class");
    const PaucRange r = pauc_range(neg.size(), alpha, beta);
    std::vector<double> p(pos.begin(), pos.end());
    std::vector<double> n(neg.begin(), neg.end());
    std::sort(p.begin(), p.end());
    std::sort(n.begin(), n.end(), std::greater<>());
    std::uint64_t risk = 0;
    for (std::size_t j = r.j_alpha; j < r.j_beta; ++j) {
        risk += static_cast<std::uint64_t>(std::lower_bound(p.begin(), p.end(), n[j]) - p.begin());
    }
    return risk;
}

namespace {

double dot(std::span<const double> w, std::span<const std::int8_t> h) {
    double s = 0.0;
    for (std::size_t t = 0; t < w.size(); ++t) s += w[t] * h[t];
    return s;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) s += a[t] * b[t];
    return s;
}

void check_pair(const ResponseMatrix& pos, const ResponseMatrix& neg) {
    if (pos.count() == 0 || neg.count() == 0) throw InvalidInput("pauc: empty class");
    if (pos.dim != neg.dim || pos.dim == 0) throw InvalidInput("pauc: response dimension mismatch");
}

// Dual of  min 1/2 |w|^2 + C xi  s.t.  w . a_k >= b_k - xi  over the working set.
// Constraint 0 is the trivial (a = 0, b = 0) one, which turns sum(lambda) <= C
// into an equality so that pairwise steps suffice.
class RestrictedQp {
public:
    RestrictedQp(std::size_t dim, double C) : dim_(dim), C_(C) {
        a_.emplace_back(dim, 0.0);
        b_.push_back(0.0);
        K_.push_back({0.0});
        lambda_.push_back(C);
    }

    void add(std::vector<double> a, double b) {
        const std::size_t k = a_.size();
        for (std::size_t l = 0; l < k; ++l) K_[l].push_back(dot(a_[l], a));
        std::vector<double> row(k + 1);
        for (std::size_t l = 0; l < k; ++l) row[l] = K_[l][k];
        row[k] = dot(a, a);
        K_.push_back(std::move(row));
        a_.push_back(std::move(a));
        b_.push_back(b);
        lambda_.push_back(0.0);
    }

    void solve(double tol, int max_steps) {
        const std::size_t n = a_.size();
        std::vector<double> g(n);
        auto refresh = [&] {
            for (std::size_t k = 0; k < n; ++k) {
                double s = b_[k];
                for (std::size_t l = 0; l < n; ++l) s -= K_[k][l] * lambda_[l];
                g[k] = s;
            }
        };
        refresh();
        for (int step = 0; step < max_steps; ++step) {
            if (step > 0 && step % 512 == 0) refresh();
            std::size_t i = 0, j = n;
            for (std::size_t k = 1; k < n; ++k) {
                if (g[k] > g[i]) i = k;
            }
            for (std::size_t k = 0; k < n; ++k) {
                if (lambda_[k] > 0.0 && (j == n || g[k] < g[j])) j = k;
            }
            if (j == n || g[i] - g[j] <= tol) break;
            const double curv = K_[i][i] + K_[j][j] - 2.0 * K_[i][j];
            double t = curv > 0.0 ? (g[i] - g[j]) / curv : lambda_[j];
            t = std::min(t, lambda_[j]);
            if (!(t > 0.0)) break;
            lambda_[i] += t;
            lambda_[j] -= t;
            if (lambda_[j] < 1e-15 * C_) {
                lambda_[i] += lambda_[j];
                lambda_[j] = 0.0;
            }
            for (std::size_t k = 0; k < n; ++k) g[k] -= t * (K_[k][i] - K_[k][j]);
        }
    }

    std::vector<double> weights() const {
        std::vector<double> w(dim_, 0.0);
        for (std::size_t k = 1; k < a_.size(); ++k) {
            if (lambda_[k] == 0.0) continue;
            for (std::size_t t = 0; t < dim_; ++t) w[t] += lambda_[k] * a_[k][t];
        }
        return w;
    }

    double objective() const {
        double lin = 0.0, quad = 0.0;
        for (std::size_t k = 0; k < a_.size(); ++k) {
            lin += lambda_[k] * b_[k];
            for (std::size_t l = 0; l < a_.size(); ++l) quad += lambda_[k] * lambda_[l] * K_[k][l];
        }
        return lin - 0.5 * quad;
    }

    /// Slack of w over the working set (>= 0 thanks to the trivial constraint).
    double slack(const std::vector<double>& w) const {
        double xi = 0.0;
        for (std::size_t k = 1; k < a_.size(); ++k) xi = std::max(xi, b_[k] - dot(a_[k], w));
        return xi;
    }

private:
    std::size_t dim_;
    double C_;
    std::vector<std::vector<double>> a_;
    std::vector<double> b_;
    std::vector<std::vector<double>> K_;
    std::vector<double> lambda_;
};

}  // namespace

PaucConstraint most_violated_constraint(const ResponseMatrix& pos, const ResponseMatrix& neg,
                                        std::span<const double> w, double beta) {
    check_pair(pos, neg);
    const std::size_t T = pos.dim, m = pos.count(), n = neg.count();
    if (w.size() != T) throw InvalidInput("most_violated_constraint: weight length mismatch");
    const PaucRange r = pauc_range(n, 0.0, beta);

    std::vector<double> ps(m), ns(n);
    for (std::size_t i = 0; i < m; ++i) ps[i] = dot(w, pos.row(i));
    for (std::size_t j = 0; j < n; ++j) ns[j] = dot(w, neg.row(j));

    std::vector<std::size_t> po(m), no(n);
    std::iota(po.begin(), po.end(), 0);
    std::iota(no.begin(), no.end(), 0);
    std::stable_sort(po.begin(), po.end(), [&](std::size_t a, std::size_t b) { return ps[a] < ps[b]; });
    std::stable_sort(no.begin(), no.end(), [&](std::size_t a, std::size_t b) { return ns[a] > ns[b]; });
    std::vector<double> sorted(m);
    for (std::size_t k = 0; k < m; ++k) sorted[k] = ps[po[k]];

    // prefix[k] = sum of the k lowest-scoring positive vectors
    std::vector<double> prefix((m + 1) * T, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        const auto h = pos.row(po[k]);
        for (std::size_t t = 0; t < T; ++t) prefix[(k + 1) * T + t] = prefix[k * T + t] + h[t];
    }

    PaucConstraint c;
    c.a.assign(T, 0.0);
    std::uint64_t pairs = 0;
    for (std::size_t r_j = 0; r_j < r.j_beta; ++r_j) {
        const std::size_t j = no[r_j];
        // pair (i, j) is ranked wrongly iff s_i - s_j < 1
        const std::size_t cnt =
            static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), ns[j] + 1.0) - sorted.begin());
        if (cnt == 0) continue;
        pairs += cnt;
        const auto h = neg.row(j);
        for (std::size_t t = 0; t < T; ++t) c.a[t] += prefix[cnt * T + t] - static_cast<double>(cnt) * h[t];
    }
    const double norm = 1.0 / (static_cast<double>(m) * static_cast<double>(r.j_beta));
    for (double& v : c.a) v *= norm;
    c.loss = static_cast<double>(pairs) * norm;
    double wa = 0.0;
    for (std::size_t t = 0; t < T; ++t) wa += w[t] * c.a[t];
    c.violation = c.loss - wa;
    return c;
}

PaucModel train_pauc_svm(const ResponseMatrix& pos, const ResponseMatrix& neg, const PaucParams& params) {
    check_pair(pos, neg);
    if (params.alpha != 0.0) throw InvalidInput("train_pauc_svm: only alpha = 0 is supported");
    pauc_range(neg.count(), params.alpha, params.beta);
    if (!(params.C > 0.0)) throw InvalidInput("train_pauc_svm: C must be positive");
    if (!(params.eps > 0.0)) throw InvalidInput("train_pauc_svm: tolerance must be positive");
    if (params.max_iter < 1) throw InvalidInput("train_pauc_svm: iteration cap must be positive");

    const std::size_t T = pos.dim;
    PaucModel pm;
    pm.alpha = params.alpha;
    pm.beta = params.beta;
    pm.C = params.C;
    pm.eps = params.eps;

    RestrictedQp qp(T, params.C);
    std::vector<double> w(T, 0.0);
    double xi = 0.0;
    std::vector<double> best_w = w;
    double best_primal = std::numeric_limits<double>::infinity();
    double best_xi = 0.0;

    for (int it = 0; it < params.max_iter; ++it) {
        PaucConstraint c = most_violated_constraint(pos, neg, w, params.beta);
        const double primal = 0.5 * dot(w, w) + params.C * std::max(0.0, c.violation);
        if (primal < best_primal) {
            best_primal = primal;
            best_w = w;
            best_xi = std::max(0.0, c.violation);
        }
        if (c.violation <= xi + params.eps) {
            pm.converged = true;
            break;
        }
        qp.add(std::move(c.a), c.loss);
        qp.solve(1e-10, 200000);
        w = qp.weights();
        xi = qp.slack(w);
        pm.iterations = it + 1;
        pm.dual_objective.push_back(qp.objective());
    }
    if (pm.converged) {
        pm.w = std::move(w);
        pm.xi = xi;
    } else {
        pm.w = std::move(best_w);
        pm.xi = best_xi;
    }
    return pm;
}

double calibrate_score(const PaucModel& pm, std::span<const std::int8_t> h) {
    if (h.size() != pm.w.size()) throw InvalidInput("calibrate_score: length mismatch");
    return dot(pm.w, h);
}

std::vector<double> default_grid_C() {
    std::vector<double> g;
    for (int k = -2; k <= 6; ++k) g.push_back(std::ldexp(1.0, k));
    return g;
}

std::vector<double> default_grid_beta() {
    std::vector<double> g;
    for (int k = 1; k <= 10; ++k) g.push_back(k / 10.0);
    return g;
}

CvResult cross_validate(const PaucTrainer& trainer, const ResponseMatrix& pos, const ResponseMatrix& neg,
                        std::span<const int> neg_image_ids, std::span<const double> grid_C,
                        std::span<const double> grid_beta, int folds, const PaucParams& base, std::uint64_t seed) {
    check_pair(pos, neg);
    if (grid_C.empty() || grid_beta.empty()) throw InvalidInput("cross_validate: empty grid");
    if (folds < 2) throw InvalidInput("cross_validate: need at least 2 folds");
    if (neg_image_ids.size() != neg.count()) throw InvalidInput("cross_validate: one image id per negative");
    const std::size_t m = pos.count(), n = neg.count();
    if (m < static_cast<std::size_t>(folds) || n < static_cast<std::size_t>(folds)) {
        throw InvalidInput("cross_validate: fewer samples than folds");
    }

    std::mt19937_64 rng(seed);
    std::vector<int> pos_fold(m), neg_fold(n);
    {
        std::vector<std::size_t> perm(m);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t k = 0; k < m; ++k) pos_fold[perm[k]] = static_cast<int>(k % folds);
    }
    std::vector<int> ids(neg_image_ids.begin(), neg_image_ids.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.size() >= static_cast<std::size_t>(folds)) {
        std::shuffle(ids.begin(), ids.end(), rng);
        std::map<int, int> fold_of;
        for (std::size_t k = 0; k < ids.size(); ++k) fold_of[ids[k]] = static_cast<int>(k % folds);
        for (std::size_t j = 0; j < n; ++j) neg_fold[j] = fold_of[neg_image_ids[j]];
    } else {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t k = 0; k < n; ++k) neg_fold[perm[k]] = static_cast<int>(k % folds);
    }

    struct Split {
        ResponseMatrix train_pos, train_neg, val_pos, val_neg;
        int images = 1;
    };
    std::vector<Split> splits(folds);
    for (int f = 0; f < folds; ++f) {
        Split& s = splits[f];
        s.train_pos = s.val_pos = s.train_neg = s.val_neg = ResponseMatrix(pos.dim);
        for (std::size_t i = 0; i < m; ++i) (pos_fold[i] == f ? s.val_pos : s.train_pos).push(pos.row(i));
        std::set<int> val_images;
        for (std::size_t j = 0; j < n; ++j) {
            if (neg_fold[j] == f) {
                s.val_neg.push(neg.row(j));
                val_images.insert(neg_image_ids[j]);
            } else {
                s.train_neg.push(neg.row(j));
            }
        }
        s.images = std::max<int>(1, static_cast<int>(val_images.size()));
    }

    const std::size_t cells = grid_C.size() * grid_beta.size();
    std::vector<CvRow> rows(cells * folds);
    parallel_for(rows.size(), [&](std::size_t task) {
        const std::size_t cell = task / folds;
        const int f = static_cast<int>(task % folds);
        PaucParams p = base;
        p.C = grid_C[cell / grid_beta.size()];
        p.beta = grid_beta[cell % grid_beta.size()];
        const Split& s = splits[f];
        const PaucModel pm = trainer(s.train_pos, s.train_neg, p);
        std::vector<double> ps(s.val_pos.count()), ns(s.val_neg.count());
        for (std::size_t i = 0; i < ps.size(); ++i) ps[i] = calibrate_score(pm, s.val_pos.row(i));
        for (std::size_t j = 0; j < ns.size(); ++j) ns[j] = calibrate_score(pm, s.val_neg.row(j));
        rows[task] = {p.C, p.beta, f, lamr(roc_from_scores(ps, ns, s.images)).value};
    });

    CvResult out;
    out.rows = rows;
    out.best_lamr = std::numeric_limits<double>::infinity();
    // Grids are visited in ascending (C, beta) order so strict < keeps the smaller on ties.
    std::vector<std::size_t> order(cells);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ca = grid_C[a / grid_beta.size()], cb = grid_C[b / grid_beta.size()];
        if (ca != cb) return ca < cb;
        return grid_beta[a % grid_beta.size()] < grid_beta[b % grid_beta.size()];
    });
    for (std::size_t cell : order) {
        double mean = 0.0;
        for (int f = 0; f < folds; ++f) mean += rows[cell * folds + f].lamr;
        mean /= folds;
        if (mean < out.best_lamr) {
            out.best_lamr = mean;
            out.best_C = grid_C[cell / grid_beta.size()];
            out.best_beta = grid_beta[cell % grid_beta.size()];
        }
    }
    return out;
}

std::string cv_csv(const CvResult& cv) {
    std::string s = "C,beta,fold,lamr\n";
    char buf[128];
    for (const auto& r : cv.rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%.17g\n", r.C, r.beta, r.fold, r.lamr);
        s += buf;
    }
    return s;
}

}  // namespace spdet
