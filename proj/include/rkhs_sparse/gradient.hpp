#pragma once

// Variable importance from the fitted function's partial derivatives. By the
// derivative reproducing property, d f / d x^l at x is
//
//   g_l(x) = sum_i alpha_i K(x_i, x) (x_i^l - x^l) / sigma^2,
//
// and coordinate l is scored by its empirical squared norm (1/m) sum_j g_l(z_j)^2
// over evaluation points z_1..z_m (the training sample by default).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rkhs_sparse/error.hpp"
#include "rkhs_sparse/estimator.hpp"
#include "rkhs_sparse/kernel.hpp"

namespace rkhs_sparse {

struct GradientScores {
    Vector scores;
    Eigen::Index n_eval = 0;

    Eigen::Index size() const { return scores.size(); }
};

/// Coordinates whose score strictly exceeds `threshold`. Indices are 0-based
/// and sorted.
struct ActiveSet {
    std::vector<std::size_t> indices;
    double threshold = 0.0;

    bool contains(std::size_t l) const { return std::binary_search(indices.begin(), indices.end(), l); }
    std::size_t size() const { return indices.size(); }
};

namespace detail {

/// Scores from representer coefficients and the cross-kernel matrix Kc with
/// entry (i, j) = K(x_i, z_j). Coordinates are processed in column blocks of
/// at most n, so the working set stays O(n m).
inline GradientScores gradient_scores_from(const Vector& alpha, const Matrix& X_train, const Matrix& Kc,
                                           const Matrix& X_eval, double sigma) {
    const Eigen::Index n = X_train.rows();
    const Eigen::Index m = X_eval.rows();
    const Eigen::Index p = X_train.cols();
    GradientScores out{Vector::Zero(p), m};
    if (m == 0 || n == 0) {
        return out;
    }

    // Shifting each coordinate by the first training value leaves every
    // difference x_i^l - z_j^l intact and makes a constant coordinate exactly 0.
    const Eigen::RowVectorXd shift = X_train.row(0);
    const Vector f = Kc.transpose() * alpha;  // f(z_j)
    const Matrix KcT = Kc.transpose();
    const double inv_s2 = 1.0 / (sigma * sigma);
    const Eigen::Index block = std::max<Eigen::Index>(1, std::min(p, n));

    for (Eigen::Index start = 0; start < p; start += block) {
        const Eigen::Index width = std::min(block, p - start);
        const Matrix Xt = (X_train.middleCols(start, width).rowwise() - shift.segment(start, width));
        const Matrix Ze = (X_eval.middleCols(start, width).rowwise() - shift.segment(start, width));
        // G(j, l) = sum_i alpha_i K(x_i, z_j) x_i^l - f(z_j) z_j^l
        Matrix G = KcT * (alpha.asDiagonal() * Xt);
        G -= f.asDiagonal() * Ze;
        out.scores.segment(start, width) = (G.colwise().squaredNorm().transpose()) * (inv_s2 * inv_s2) /
                                           static_cast<double>(m);
    }
    return out;
}

}  // namespace detail

/// Gradient scores on the training sample, reusing its Gram matrix.
inline GradientScores gradient_scores(const FittedModel& model, const GramMatrix& G) {
    if (G.size() != model.n()) {
        throw InvalidArgument("dimension mismatch: Gram matrix does not match the model");
    }
    return detail::gradient_scores_from(model.alpha(), model.train_X(), G.entries, model.train_X(), model.sigma());
}

inline GradientScores gradient_scores(const FittedModel& model, const Matrix& X_eval) {
    if (X_eval.cols() != model.p()) {
        throw InvalidArgument("dimension mismatch: model has " + std::to_string(model.p()) +
                              " predictors, evaluation data has " + std::to_string(X_eval.cols()));
    }
    const Matrix Kc = cross_kernel(model.train_X(), X_eval, model.sigma());
    return detail::gradient_scores_from(model.alpha(), model.train_X(), Kc, X_eval, model.sigma());
}

inline GradientScores gradient_scores(const FittedModel& model) {
    return gradient_scores(model, gram(model.train_X(), model.sigma()));
}

/// Hard threshold: keep l with score_l > v.
inline ActiveSet select(const GradientScores& scores, double v) {
    if (!(v >= 0.0)) {
        throw InvalidArgument("selection threshold must be nonnegative");
    }
    ActiveSet out{{}, v};
    for (Eigen::Index l = 0; l < scores.scores.size(); ++l) {
        if (scores.scores(l) > v) {
            out.indices.push_back(static_cast<std::size_t>(l));
        }
    }
    return out;
}

}  // namespace rkhs_sparse
