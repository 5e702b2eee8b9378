#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "spdet/errors.hpp"
#include "spdet/pauc.hpp"

using namespace spdet;

namespace {

ResponseMatrix rows(std::size_t dim, std::initializer_list<std::vector<std::int8_t>> r) {
    ResponseMatrix m(dim);
    for (const auto& v : r) m.push(v);
    return m;
}

ResponseMatrix random_rows(std::size_t n, std::size_t d, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> coin(0, 1);
    ResponseMatrix m(d);
    for (std::size_t i = 0; i < n * d; ++i) m.values.push_back(coin(rng) ? 1 : -1);
    return m;
}

}  // namespace

TEST_CASE("pauc range rounding") {
    CHECK(pauc_range(10, 0.0, 0.7).j_beta == 7);
    CHECK(pauc_range(3, 0.0, 1.0 / 3).j_beta == 1);
    CHECK(pauc_range(7, 0.0, 0.5).j_beta == 4);
    CHECK(pauc_range(10, 0.1, 0.7).j_alpha == 1);
    CHECK_THROWS_AS(pauc_range(0, 0.0, 0.5), InvalidInput);
    CHECK_THROWS_AS(pauc_range(10, 0.5, 0.5), InvalidInput);
}

TEST_CASE("pauc risk examples") {
    const std::vector<double> pos{2, 3}, neg{4, 1, 0};
    CHECK(pauc_risk(pos, neg, 0.0, 1.0) == 2);
    CHECK(pauc_risk(pos, neg, 0.0, 1.0 / 3) == 2);
    CHECK(pauc_risk(std::vector<double>{5, 6}, neg, 0.0, 1.0) == 0);
    // Ties are not counted.
    CHECK(pauc_risk(std::vector<double>{4}, neg, 0.0, 1.0) == 0);
    CHECK_THROWS_AS(pauc_risk(std::vector<double>{}, neg, 0.0, 1.0), InvalidInput);
}

TEST_CASE("pauc risk against pair enumeration and AUC") {
    std::mt19937_64 rng(41);
    for (int k = 0; k < 200; ++k) {
        const int m = std::uniform_int_distribution<int>(1, 12)(rng), n = std::uniform_int_distribution<int>(1, 12)(rng);
        const int tenths = std::uniform_int_distribution<int>(1, 10)(rng);
        std::uniform_int_distribution<int> s(0, 4);
        std::vector<double> pos(m), neg(n);
        for (auto& v : pos) v = s(rng);
        for (auto& v : neg) v = s(rng);
        CHECK(pauc_risk(pos, neg, 0.0, tenths / 10.0) == oracle::pauc_pairs(pos, neg, tenths));
    }
    // Ranking is all that matters: a monotone transform leaves the risk alone.
    std::vector<double> pos{0.1, 0.5, 0.9}, neg{0.2, 0.6, 0.7, 0.05};
    const auto r = pauc_risk(pos, neg, 0.0, 0.5);
    for (auto& v : pos) v = std::exp(3 * v);
    for (auto& v : neg) v = std::exp(3 * v);
    CHECK(pauc_risk(pos, neg, 0.0, 0.5) == r);
}

TEST_CASE("weak responses and calibrated scores") {
    std::mt19937_64 rng(42);
    auto m = oracle::random_model(12, 20, 2, rng);
    std::uniform_int_distribution<int> bin(0, 255);
    std::vector<std::uint8_t> bins(12);
    for (auto& b : bins) b = static_cast<std::uint8_t>(bin(rng));
    const auto h = weak_responses(m, bins);
    REQUIRE(h.size() == 20);
    PaucModel pm;
    for (std::size_t t = 0; t < 20; ++t) {
        CHECK(h[t] == m.trees[t].predict(bins));
        pm.w.push_back(m.coefficient(t));
    }
    m.disable_cascade();
    CHECK(calibrate_score(pm, h) == doctest::Approx(score_window(m, bins).score).epsilon(1e-12));

    PaucModel zero;
    zero.w.assign(20, 0.0);
    CHECK(calibrate_score(zero, h) == 0.0);
    PaucModel unit = zero;
    unit.w[3] = 1.0;
    CHECK(calibrate_score(unit, h) == h[3]);
    CHECK_THROWS_AS(calibrate_score(unit, std::vector<std::int8_t>{1}), InvalidInput);

    RawSamples raw(12);
    std::vector<float> f(12, 0.5f);
    raw.push(f);
    raw.push(f);
    const auto mat = weak_responses(m, raw);
    CHECK(mat.count() == 2);
    CHECK(std::vector<std::int8_t>(mat.row(1).begin(), mat.row(1).end()) == weak_responses_raw(m, f));
}

TEST_CASE("most violated constraint on a hand case") {
    // One positive scored 0 and one negative scored 0: pi = 1, loss 1.
    const auto pos = rows(2, {{1, -1}});
    const auto neg = rows(2, {{-1, 1}});
    const std::vector<double> w{0.0, 0.0};
    const auto c = most_violated_constraint(pos, neg, w, 1.0);
    CHECK(c.loss == doctest::Approx(1.0));
    CHECK(c.a[0] == doctest::Approx(2.0));
    CHECK(c.a[1] == doctest::Approx(-2.0));
    CHECK(c.violation == doctest::Approx(1.0));
    // Well separated: no pair violates the margin.
    const std::vector<double> far{1.0, -1.0};
    CHECK(most_violated_constraint(pos, neg, far, 1.0).loss == 0.0);
}

TEST_CASE("structural SVM examples") {
    const auto pos = rows(2, {{1, -1}});
    const auto neg = rows(2, {{-1, 1}});
    PaucParams p;
    p.beta = 1.0;
    const auto pm = train_pauc_svm(pos, neg, p);
    CHECK(pm.converged);
    const std::vector<double> sp{calibrate_score(pm, pos.row(0))}, sn{calibrate_score(pm, neg.row(0))};
    CHECK(pauc_risk(sp, sn, 0.0, 1.0) == 0);
    CHECK(sp[0] - sn[0] >= 1.0 - 1e-3 - pm.xi);

    std::mt19937_64 rng(43);
    const auto rp = random_rows(6, 5, rng), rn = random_rows(8, 5, rng);
    PaucParams tiny;
    tiny.C = 1e-6;
    const auto small = train_pauc_svm(rp, rn, tiny);
    double norm = 0.0;
    for (double v : small.w) norm += v * v;
    CHECK(std::sqrt(norm) < 1e-5);
    CHECK(small.xi == doctest::Approx(1.0).epsilon(1e-4));  // loss of w = 0 is 1

    PaucParams bad;
    bad.alpha = 0.1;
    CHECK_THROWS_AS(train_pauc_svm(rp, rn, bad), InvalidInput);
    bad = {};
    bad.C = 0.0;
    CHECK_THROWS_AS(train_pauc_svm(rp, rn, bad), InvalidInput);
}

TEST_CASE("structural SVM objective and iteration cap") {
    std::mt19937_64 rng(44);
    const auto rp = random_rows(30, 10, rng), rn = random_rows(60, 10, rng);
    PaucParams p;
    p.max_iter = 2;
    p.eps = 1e-9;
    const auto capped = train_pauc_svm(rp, rn, p);
    CHECK(!capped.converged);
    CHECK(capped.iterations == 2);
    p.max_iter = 1000;
    p.eps = 1e-3;
    const auto full = train_pauc_svm(rp, rn, p);
    CHECK(full.converged);
    for (std::size_t k = 1; k < full.dual_objective.size(); ++k) {
        CHECK(full.dual_objective[k] >= full.dual_objective[k - 1] - 1e-9);
    }
    const auto c = most_violated_constraint(rp, rn, full.w, p.beta);
    CHECK(c.violation <= full.xi + p.eps + 1e-9);
}

TEST_CASE("cross validation grid selection") {
    std::mt19937_64 rng(45);
    // Response 0 ranks perfectly; response 1 is noise.
    ResponseMatrix pos(2), neg(2);
    std::uniform_int_distribution<int> coin(0, 1);
    std::vector<int> ids;
    for (int i = 0; i < 40; ++i) pos.push(std::vector<std::int8_t>{1, static_cast<std::int8_t>(coin(rng) ? 1 : -1)});
    for (int i = 0; i < 80; ++i) {
        neg.push(std::vector<std::int8_t>{-1, static_cast<std::int8_t>(coin(rng) ? 1 : -1)});
        ids.push_back(i / 4);
    }
    int calls = 0;
    PaucTrainer fake = [&](const ResponseMatrix& p, const ResponseMatrix&, const PaucParams& prm) {
        ++calls;
        PaucModel m;
        m.w.assign(p.dim, 0.0);
        m.w[prm.beta == 1.0 ? 0 : 1] = 1.0;
        m.beta = prm.beta;
        m.C = prm.C;
        return m;
    };
    const std::vector<double> one_C{2.0}, one_b{0.5};
    auto cv = cross_validate(fake, pos, neg, ids, one_C, one_b, 3, {}, 1);
    CHECK(cv.best_C == 2.0);
    CHECK(cv.best_beta == 0.5);
    CHECK(cv.rows.size() == 3);
    CHECK(calls == 3);

    const std::vector<double> grid_C{1.0, 4.0}, grid_b{0.3, 0.7, 1.0};
    cv = cross_validate(fake, pos, neg, ids, grid_C, grid_b, 4, {}, 1);
    CHECK(cv.best_beta == 1.0);
    CHECK(cv.best_C == 1.0);  // equal scores: the smaller C wins
    CHECK(cv.rows.size() == 2 * 3 * 4);
    const auto csv = cv_csv(cv);
    CHECK(csv.rfind("C,beta,fold,lamr\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 24);

    CHECK_THROWS_AS(cross_validate(fake, pos, neg, ids, grid_C, grid_b, 1, {}, 1), InvalidInput);
    CHECK_THROWS_AS(cross_validate(fake, pos, neg, std::vector<int>(3, 0), grid_C, grid_b, 3, {}, 1), InvalidInput);
}

TEST_CASE("cross validation with the real trainer is deterministic") {
    std::mt19937_64 rng(46);
    const auto rp = random_rows(20, 6, rng), rn = random_rows(40, 6, rng);
    std::vector<int> ids(40);
    for (int i = 0; i < 40; ++i) ids[i] = i % 8;
    const std::vector<double> gc{1.0, 16.0}, gb{0.5, 1.0};
    const auto a = cross_validate(train_pauc_svm, rp, rn, ids, gc, gb, 3, {}, 9);
    const auto b = cross_validate(train_pauc_svm, rp, rn, ids, gc, gb, 3, {}, 9);
    CHECK(cv_csv(a) == cv_csv(b));
    CHECK(a.best_C == b.best_C);
}
