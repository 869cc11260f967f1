#pragma once

// Regularized kernel M-estimation
//
//   minimize  J(alpha) = (1/n) sum_i L(y_i, (K alpha)_i) + lambda alpha' K alpha
//
// over the representer coefficients alpha, so the fitted function is
// f(x) = sum_i alpha_i K(x_i, x).
//
// Solver routes:
//  * square loss, closed form: Cholesky on K + n lambda I.
//  * smooth losses, iterative: accelerated gradient descent in the RKHS
//    metric. The RKHS gradient of J is sum_i r_i K(x_i, .) with
//    r = L'(y, K alpha)/n + 2 lambda alpha, and J is 2 lambda-strongly convex
//    in that metric, so r' K r / (4 lambda) bounds the suboptimality.
//  * nonsmooth losses: coordinate descent on the box-constrained dual
//      min_u  sum_i L*_i(u_i) + u' K u / (4 lambda n),   alpha = -u / (2 lambda n),
//    stopped on the primal-dual gap.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "rkhs_sparse/error.hpp"
#include "rkhs_sparse/kernel.hpp"
#include "rkhs_sparse/loss.hpp"

namespace rkhs_sparse {

struct SolverOptions {
    enum class Method {
        automatic,    // closed form for square loss, iterative otherwise
        closed_form,  // square loss only
        iterative,
    };

    Method method = Method::automatic;
    int max_iterations = 10'000;
    /// Stop once the certified suboptimality (gradient bound or duality gap)
    /// drops below this fraction of the objective.
    double tolerance = 1e-10;
    /// Warm start; alpha = 0 when absent.
    std::optional<Vector> initial_alpha;
};

class FittedModel {
  public:
    FittedModel(Matrix train_X, Vector alpha, double sigma, double lambda, LossSpec loss, double objective_value,
                int solver_iterations, bool converged)
        : train_X_(std::move(train_X)),
          alpha_(std::move(alpha)),
          sigma_(sigma),
          lambda_(lambda),
          loss_(loss),
          objective_value_(objective_value),
          solver_iterations_(solver_iterations),
          converged_(converged) {}

    const Matrix& train_X() const { return train_X_; }
    const Vector& alpha() const { return alpha_; }
    double sigma() const { return sigma_; }
    double lambda() const { return lambda_; }
    const LossSpec& loss() const { return loss_; }
    double objective_value() const { return objective_value_; }
    int solver_iterations() const { return solver_iterations_; }
    /// False when the iteration cap was hit before the stopping rule fired.
    bool converged() const { return converged_; }

    Eigen::Index n() const { return train_X_.rows(); }
    Eigen::Index p() const { return train_X_.cols(); }

  private:
    Matrix train_X_;
    Vector alpha_;
    double sigma_;
    double lambda_;
    LossSpec loss_;
    double objective_value_;
    int solver_iterations_;
    bool converged_;
};

namespace detail {

struct SolveResult {
    Vector alpha;
    int iterations = 0;
    bool converged = true;
};

inline double empirical_risk(const LossSpec& loss, const Vector& y, const Vector& f) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        s += loss_value_unchecked(loss, y(i), f(i));
    }
    return s / static_cast<double>(y.size());
}

inline double objective_from(const LossSpec& loss, const Vector& y, const Vector& alpha, const Vector& K_alpha,
                             double lambda) {
    return empirical_risk(loss, y, K_alpha) + lambda * alpha.dot(K_alpha);
}

/// Largest eigenvalue of the PSD matrix K by power iteration.
inline double spectral_norm_psd(const Matrix& K) {
    const Eigen::Index n = K.rows();
    Vector v = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    double est = 0.0;
    for (int it = 0; it < 100; ++it) {
        Vector w = K * v;
        const double norm = w.norm();
        if (norm == 0.0) {
            return 0.0;
        }
        v = w / norm;
        if (std::abs(norm - est) <= 1e-9 * norm) {
            est = norm;
            break;
        }
        est = norm;
    }
    return est;
}

inline void require_finite_alpha(const Vector& alpha) {
    if (!alpha.allFinite()) {
        throw NumericalError("solver diverged: non-finite representer coefficients");
    }
}

inline SolveResult solve_cholesky(const Matrix& K, const Vector& y, double lambda) {
    const auto n = static_cast<double>(K.rows());
    Matrix A = K;
    A.diagonal().array() += n * lambda;
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success) {
        A.diagonal().array() += 1e-10 * K.trace() / n;
        llt.compute(A);
        if (llt.info() != Eigen::Success) {
            throw NumericalError("Cholesky factorization of K + n*lambda*I failed");
        }
    }
    SolveResult res{llt.solve(y), 1, true};
    require_finite_alpha(res.alpha);
    return res;
}

inline SolveResult solve_smooth(const Matrix& K, const Vector& y, const LossSpec& loss, double lambda,
                                const SolverOptions& opts) {
    const Eigen::Index n = K.rows();
    const auto nd = static_cast<double>(n);
    const double curvature = loss.kind == LossKind::square ? 2.0 : 0.25 * kInvLn2;
    const double mu = 2.0 * lambda;
    double lip = curvature * spectral_norm_psd(K) / nd + mu;
    double step = 1.0 / lip;

    Vector alpha = opts.initial_alpha.value_or(Vector::Zero(n));
    Vector K_alpha = K * alpha;
    Vector beta = alpha;
    Vector K_beta = K_alpha;
    double J_alpha = objective_from(loss, y, alpha, K_alpha, lambda);

    Vector r(n);
    Vector Kr(n);
    auto residual = [&](const Vector& b, const Vector& Kb) {
        for (Eigen::Index i = 0; i < n; ++i) {
            r(i) = loss_subgradient_unchecked(loss, y(i), Kb(i)) / nd + 2.0 * lambda * b(i);
        }
        Kr.noalias() = K * r;
    };

    SolveResult res;
    res.converged = false;
    for (int it = 1; it <= opts.max_iterations; ++it) {
        res.iterations = it;
        if (it % 200 == 0) {
            K_alpha.noalias() = K * alpha;
            K_beta.noalias() = K * beta;
        }
        residual(beta, K_beta);
        const double gnorm2 = r.dot(Kr);
        const double J_beta = objective_from(loss, y, beta, K_beta, lambda);
        if (!std::isfinite(J_beta) || !std::isfinite(gnorm2)) {
            throw NumericalError("solver diverged: non-finite objective");
        }
        if (gnorm2 / (4.0 * lambda) <= opts.tolerance * std::max(std::abs(J_beta), 1e-300)) {
            alpha = beta;
            K_alpha = K_beta;
            res.converged = true;
            break;
        }

        Vector next = beta - step * r;
        Vector K_next = K_beta - step * Kr;
        double J_next = objective_from(loss, y, next, K_next, lambda);
        // slack absorbs rounding in J once the decrease is near machine precision
        const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(J_beta);
        while (J_next > J_beta - 0.5 * step * gnorm2 + slack && step * lip > 1e-12) {
            step *= 0.5;
            next = beta - step * r;
            K_next = K_beta - step * Kr;
            J_next = objective_from(loss, y, next, K_next, lambda);
        }

        if (J_next > J_alpha) {
            // momentum overshot: restart from the last iterate
            beta = alpha;
            K_beta = K_alpha;
            continue;
        }
        const double L_now = 1.0 / step;
        const double momentum = (std::sqrt(L_now) - std::sqrt(mu)) / (std::sqrt(L_now) + std::sqrt(mu));
        beta = next + momentum * (next - alpha);
        K_beta = K_next + momentum * (K_next - K_alpha);
        alpha = std::move(next);
        K_alpha = std::move(K_next);
        J_alpha = J_next;
    }
    res.alpha = std::move(alpha);
    require_finite_alpha(res.alpha);
    return res;
}

/// Box [lo, hi] and l1 weight of the dual variable u_i for a nonsmooth loss;
/// the conjugate is L*_i(u) = u y_i + l1 |u| on the box.
struct DualBox {
    double lo;
    double hi;
    double l1;
};

inline DualBox dual_box(const LossSpec& loss, double y) {
    switch (loss.kind) {
        case LossKind::check: return {-loss.tau, 1.0 - loss.tau, 0.0};
        case LossKind::eps_insensitive: return {-1.0, 1.0, loss.epsilon};
        case LossKind::hinge: return y > 0 ? DualBox{-1.0, 0.0, 0.0} : DualBox{0.0, 1.0, 0.0};
        default: break;
    }
    throw InvalidArgument("dual coordinate descent only handles nonsmooth losses");
}

inline SolveResult solve_dual_cd(const Matrix& K, const Vector& y, const LossSpec& loss, double lambda,
                                 const SolverOptions& opts) {
    const Eigen::Index n = K.rows();
    const auto nd = static_cast<double>(n);
    const double scale = 1.0 / (2.0 * lambda * nd);  // alpha = -scale * u

    std::vector<DualBox> box(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        box[static_cast<std::size_t>(i)] = dual_box(loss, y(i));
    }

    Vector u = Vector::Zero(n);
    if (opts.initial_alpha) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& b = box[static_cast<std::size_t>(i)];
            u(i) = std::clamp(-(*opts.initial_alpha)(i) / scale, b.lo, b.hi);
        }
    }
    Vector Ku = K * u;

    auto gap = [&](double& primal) {
        const Vector f = -scale * Ku;
        const double uKu = u.dot(Ku);
        primal = empirical_risk(loss, y, f) + lambda * scale * scale * uKu;
        double conj = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            conj += u(i) * y(i) + box[static_cast<std::size_t>(i)].l1 * std::abs(u(i));
        }
        const double dual = -(conj + 0.5 * scale * uKu) / nd;
        return primal - dual;
    };

    SolveResult res;
    res.converged = false;
    for (int sweep = 1; sweep <= opts.max_iterations; ++sweep) {
        res.iterations = sweep;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& b = box[static_cast<std::size_t>(i)];
            const double h = scale * K(i, i);
            const double g = y(i) + scale * Ku(i);
            double w = u(i) - g / h;
            const double shrink = b.l1 / h;
            w = w > shrink ? w - shrink : (w < -shrink ? w + shrink : 0.0);
            const double z = std::clamp(w, b.lo, b.hi);
            const double d = z - u(i);
            if (d != 0.0) {
                u(i) = z;
                Ku.noalias() += d * K.col(i);
            }
        }
        if (sweep % 50 == 0) {
            Ku.noalias() = K * u;
        }
        double primal = 0.0;
        const double g = gap(primal);
        if (!std::isfinite(g)) {
            throw NumericalError("solver diverged: non-finite duality gap");
        }
        if (g <= opts.tolerance * std::max(primal, 1e-300)) {
            res.converged = true;
            break;
        }
    }
    res.alpha = -scale * u;
    require_finite_alpha(res.alpha);
    return res;
}

inline void validate_fit_inputs(const Matrix& X, const Vector& y, const LossSpec& loss, double lambda) {
    if (X.rows() < 1) {
        throw InvalidArgument("fit needs at least one observation");
    }
    if (X.rows() != y.size()) {
        throw InvalidArgument("dimension mismatch: " + std::to_string(X.rows()) + " rows but " +
                              std::to_string(y.size()) + " responses");
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw InvalidArgument("regularization parameter lambda must be positive");
    }
    require_finite(X, "predictor matrix");
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        require_label(loss, y(i));
    }
}

}  // namespace detail

/// Fit with a precomputed Gram matrix of X; used where one Gram matrix is
/// shared across a regularization grid.
inline FittedModel fit_with_gram(const Matrix& X, const GramMatrix& G, const Vector& y, const LossSpec& loss,
                                 double lambda, const SolverOptions& opts = {}) {
    detail::validate_fit_inputs(X, y, loss, lambda);
    if (G.size() != X.rows()) {
        throw InvalidArgument("dimension mismatch: Gram matrix does not match predictor rows");
    }
    if (opts.initial_alpha && opts.initial_alpha->size() != X.rows()) {
        throw InvalidArgument("dimension mismatch: warm start has wrong length");
    }
    const Matrix& K = G.entries;

    detail::SolveResult res;
    switch (opts.method) {
        case SolverOptions::Method::closed_form:
            if (loss.kind != LossKind::square) {
                throw InvalidArgument("closed-form solve is only available for the square loss");
            }
            res = detail::solve_cholesky(K, y, lambda);
            break;
        case SolverOptions::Method::automatic:
            if (loss.kind == LossKind::square) {
                res = detail::solve_cholesky(K, y, lambda);
                break;
            }
            [[fallthrough]];
        case SolverOptions::Method::iterative:
            res = is_smooth(loss) ? detail::solve_smooth(K, y, loss, lambda, opts)
                                  : detail::solve_dual_cd(K, y, loss, lambda, opts);
            break;
    }

    const Vector K_alpha = K * res.alpha;
    const double J = detail::objective_from(loss, y, res.alpha, K_alpha, lambda);
    if (!std::isfinite(J)) {
        throw NumericalError("solver diverged: non-finite objective");
    }
    return FittedModel(X, std::move(res.alpha), G.bandwidth, lambda, loss, J, res.iterations, res.converged);
}

inline FittedModel fit(const Matrix& X, const Vector& y, const LossSpec& loss, double lambda,
                       const BandwidthConfig& bw = {}, const SolverOptions& opts = {}) {
    detail::validate_fit_inputs(X, y, loss, lambda);
    return fit_with_gram(X, gram(X, resolve_bandwidth(bw, X)), y, loss, lambda, opts);
}

/// f(x_j) = sum_i alpha_i K(x_i, x_j) for each row of X_eval.
inline Vector predict(const FittedModel& model, const Matrix& X_eval) {
    if (X_eval.cols() != model.p()) {
        throw InvalidArgument("dimension mismatch: model has " + std::to_string(model.p()) +
                              " predictors, evaluation data has " + std::to_string(X_eval.cols()));
    }
    return cross_kernel(X_eval, model.train_X(), model.sigma()) * model.alpha();
}

/// (1/n) sum L(y_i, f(x_i)) + lambda alpha' K alpha, recomputed from scratch.
inline double objective(const FittedModel& model, const Matrix& X, const Vector& y) {
    if (X.rows() != model.n() || y.size() != model.n()) {
        throw InvalidArgument("objective must be evaluated on the training sample");
    }
    const GramMatrix G = gram(X, model.sigma());
    const Vector K_alpha = G.entries * model.alpha();
    double risk = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        risk += loss_value(model.loss(), y(i), K_alpha(i));
    }
    return risk / static_cast<double>(y.size()) + model.lambda() * model.alpha().dot(K_alpha);
}

}  // namespace rkhs_sparse
