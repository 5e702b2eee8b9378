#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spdet/boost.hpp"

namespace spdet {

/// Row-major matrix of +-1 weak-learner outputs, one row per sample.
struct ResponseMatrix {
    std::size_t dim = 0;
    std::vector<std::int8_t> values;

    ResponseMatrix() = default;
    explicit ResponseMatrix(std::size_t d) : dim(d) {}

    std::size_t count() const { return dim == 0 ? 0 : values.size() / dim; }
    std::span<const std::int8_t> row(std::size_t i) const {
        return std::span<const std::int8_t>(values).subspan(i * dim, dim);
    }
    void push(std::span<const std::int8_t> h);
};

/// Raw tree outputs h_t(x) of every tree, without coefficients.
std::vector<std::int8_t> weak_responses(const BoostedModel& model, std::span<const std::uint8_t> bins);
std::vector<std::int8_t> weak_responses_raw(const BoostedModel& model, std::span<const float> features);
ResponseMatrix weak_responses(const BoostedModel& model, const RawSamples& samples);

struct PaucRange {
    std::size_t j_alpha = 0;
    std::size_t j_beta = 0;
};

/// j_alpha = floor(alpha n), j_beta = ceil(beta n), computed with a 1e-9
/// tolerance so that e.g. 0.7 * 10 gives 7.
PaucRange pauc_range(std::size_t n, double alpha, double beta);

/// Number of (positive, negative) pairs with pos < neg among the negatives
/// ranked j_alpha+1 .. j_beta by descending score.
std::uint64_t pauc_risk(std::span<const double> pos, std::span<const double> neg, double alpha, double beta);

struct PaucParams {
    double alpha = 0.0;
    double beta = 0.7;
    double C = 16.0;
    double eps = 1e-3;
    int max_iter = 1000;
};

/// One structural constraint  w . a >= loss - xi  (normalised by 1 / (m j_beta)).
struct PaucConstraint {
    std::vector<double> a;
    double loss = 0.0;
    double violation = 0.0;  // loss - w . a at the w it was generated for
};

/// Most violated constraint for alpha = 0 at weights w.
PaucConstraint most_violated_constraint(const ResponseMatrix& pos, const ResponseMatrix& neg,
                                        std::span<const double> w, double beta);

struct PaucModel {
    std::vector<double> w;
    double alpha = 0.0;
    double beta = 0.7;
    double C = 16.0;
    double eps = 1e-3;
    double xi = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> dual_objective;  // restricted QP objective after each cutting-plane round

    bool operator==(const PaucModel&) const = default;
};

/// 1-slack cutting-plane structural SVM for the pAUC risk over [0, beta].
PaucModel train_pauc_svm(const ResponseMatrix& pos, const ResponseMatrix& neg, const PaucParams& params);

double calibrate_score(const PaucModel& pm, std::span<const std::int8_t> h);

std::vector<double> default_grid_C();
std::vector<double> default_grid_beta();

using PaucTrainer = std::function<PaucModel(const ResponseMatrix&, const ResponseMatrix&, const PaucParams&)>;

struct CvRow {
    double C = 0.0;
    double beta = 0.0;
    int fold = 0;
    double lamr = 1.0;
};

struct CvResult {
    double best_C = 0.0;
    double best_beta = 0.0;
    double best_lamr = 1.0;
    std::vector<CvRow> rows;
};

/// Grid search by mean validation log-average miss rate. Negatives are split by
/// image id when there are at least `folds` distinct ids; FPPI is counted over
/// the distinct negative images of the validation fold.
CvResult cross_validate(const PaucTrainer& trainer, const ResponseMatrix& pos, const ResponseMatrix& neg,
                        std::span<const int> neg_image_ids, std::span<const double> grid_C,
                        std::span<const double> grid_beta, int folds, const PaucParams& base, std::uint64_t seed);

std::string cv_csv(const CvResult& cv);

}  // namespace spdet
