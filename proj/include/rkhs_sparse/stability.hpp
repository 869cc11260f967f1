#pragma once

// Selection stability: split the sample into random halves, select on each
// half, and measure agreement of the two active sets with Cohen's kappa,
// averaged over B splits. The regularization parameter and the selection
// threshold are tuned on that stability surface.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rkhs_sparse/error.hpp"
#include "rkhs_sparse/estimator.hpp"
#include "rkhs_sparse/gradient.hpp"
#include "rkhs_sparse/kernel.hpp"
#include "rkhs_sparse/loss.hpp"
#include "rkhs_sparse/parallel.hpp"
#include "rkhs_sparse/random.hpp"

namespace rkhs_sparse {

struct SplitPlan {
    std::uint64_t seed = 0;
    std::size_t replications = 20;
};

/// Rows of the two halves of split b: sizes floor(n/2) and ceil(n/2), each
/// sorted ascending. Depends only on (plan.seed, b, n).
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_halves(const SplitPlan& plan,
                                                                                  std::size_t n, std::size_t b) {
    Rng rng(derive_seed(plan.seed, b));
    auto perm = rng.permutation(n);
    const auto half = static_cast<std::ptrdiff_t>(n / 2);
    std::vector<std::size_t> first(perm.begin(), perm.begin() + half);
    std::vector<std::size_t> second(perm.begin() + half, perm.end());
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());
    return {std::move(first), std::move(second)};
}

/// Cohen's kappa between two selections from {0, ..., p-1}. Returns 0 when
/// chance agreement is 1 (both selections empty or both full).
inline double cohen_kappa(std::vector<std::size_t> a, std::vector<std::size_t> b, std::size_t p) {
    for (const auto* s : {&a, &b}) {
        for (std::size_t l : *s) {
            if (l >= p) {
                throw InvalidArgument("selected index " + std::to_string(l + 1) + " outside 1.." + std::to_string(p));
            }
        }
    }
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());

    std::vector<std::size_t> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    // kappa = (p (n11 + n22) - e) / (p^2 - e) with e = |A||B| + |A^c||B^c|, all integers
    const auto pd = static_cast<double>(p);
    const auto na = static_cast<double>(a.size());
    const auto nb = static_cast<double>(b.size());
    const auto n11 = static_cast<double>(both.size());
    const double n22 = pd - na - nb + n11;
    const double chance = na * nb + (pd - na) * (pd - nb);
    const double denom = pd * pd - chance;
    if (denom <= 0.0) {
        return 0.0;
    }
    return (pd * (n11 + n22) - chance) / denom;
}

inline double cohen_kappa(const ActiveSet& a, const ActiveSet& b, std::size_t p) {
    return cohen_kappa(a.indices, b.indices, p);
}

/// {10^(lo + k step) : k = 0, 1, ...} up to exponent hi.
inline std::vector<double> log_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw InvalidArgument("log grid needs finite lo <= hi and a positive step");
    }
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> grid;
    grid.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        grid.push_back(std::pow(10.0, lo + static_cast<double>(k) * step));
    }
    return grid;
}

/// {10^(-3 + 0.1 s) : s = 0..60}.
inline std::vector<double> default_grid() { return log_grid(-3.0, 3.0, 0.1); }

struct TuneOptions {
    std::vector<double> lambda_grid = default_grid();
    std::vector<double> v_grid = default_grid();
    std::size_t replications = 20;
    double q_fraction = 0.9;
    std::uint64_t seed = 0;
    BandwidthConfig bandwidth{};
    SolverOptions solver{};
};

struct StabilityReport {
    std::vector<double> lambda_grid;
    std::vector<double> v_grid;
    Matrix s_hat;  // rows follow lambda_grid, columns v_grid
    double chosen_lambda = 0.0;
    double chosen_v = 0.0;
    double q_fraction = 0.9;
    ActiveSet final_active_set;
    GradientScores final_scores;
    double bandwidth = 0.0;
    std::size_t successful_replications = 0;
    std::vector<std::string> warnings;
};

struct ParameterChoice {
    std::size_t lambda_index = 0;
    std::size_t v_index = 0;
};

/// Largest threshold index k with s(k) / max s >= q for one row of the
/// stability surface, or nullopt when the row has no positive stability.
inline std::optional<std::size_t> choose_threshold(const Eigen::Ref<const Eigen::RowVectorXd>& s_row,
                                                   double q_fraction) {
    if (s_row.size() == 0) {
        return std::nullopt;
    }
    const double best = s_row.maxCoeff();
    if (!(best > 0.0)) {
        return std::nullopt;
    }
    std::optional<std::size_t> chosen;
    for (Eigen::Index k = 0; k < s_row.size(); ++k) {
        if (s_row(k) / best >= q_fraction) {
            chosen = static_cast<std::size_t>(k);
        }
    }
    return chosen;
}

/// Per-lambda threshold rule, then the lambda whose chosen threshold is most
/// stable; ties go to the smaller lambda. Grids are ascending.
inline ParameterChoice choose_parameters(const Matrix& s_hat, double q_fraction) {
    std::optional<ParameterChoice> best;
    double best_s = 0.0;
    for (Eigen::Index i = 0; i < s_hat.rows(); ++i) {
        const auto k = choose_threshold(s_hat.row(i), q_fraction);
        if (!k) {
            continue;
        }
        const double s = s_hat(i, static_cast<Eigen::Index>(*k));
        if (!best || s > best_s) {
            best = ParameterChoice{static_cast<std::size_t>(i), *k};
            best_s = s;
        }
    }
    if (!best) {
        throw NumericalError("no stable selection: estimated stability is non-positive across the whole grid");
    }
    return *best;
}

namespace detail {

inline Matrix take_rows(const Matrix& X, const std::vector<std::size_t>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(rows[r]));
    }
    return out;
}

inline Vector take_rows(const Vector& y, const std::vector<std::size_t>& rows) {
    Vector out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out(static_cast<Eigen::Index>(r)) = y(static_cast<Eigen::Index>(rows[r]));
    }
    return out;
}

/// Gradient scores of one half-sample for every lambda of the grid, or the
/// reason the half could not be used.
struct HalfScores {
    std::vector<Vector> per_lambda;
    std::optional<std::string> failure;
    std::size_t unconverged = 0;
};

inline HalfScores score_half(const Matrix& X, const Vector& y, const std::vector<std::size_t>& rows,
                             const LossSpec& loss, const std::vector<double>& lambda_grid, const TuneOptions& opts) {
    HalfScores out;
    const Matrix Xh = take_rows(X, rows);
    const Vector yh = take_rows(y, rows);
    double sigma = 0.0;
    try {
        sigma = resolve_bandwidth(opts.bandwidth, Xh);
    } catch (const DegenerateBandwidth& e) {
        out.failure = e.what();
        return out;
    }
    const GramMatrix G = gram(Xh, sigma);
    out.per_lambda.reserve(lambda_grid.size());
    for (double lambda : lambda_grid) {
        const FittedModel model = fit_with_gram(Xh, G, yh, loss, lambda, opts.solver);
        if (!model.converged()) {
            ++out.unconverged;
        }
        out.per_lambda.push_back(gradient_scores(model, G).scores);
    }
    return out;
}

inline double kappa_at(const Vector& s1, const Vector& s2, double v) {
    std::vector<std::size_t> a;
    std::vector<std::size_t> b;
    for (Eigen::Index l = 0; l < s1.size(); ++l) {
        if (s1(l) > v) a.push_back(static_cast<std::size_t>(l));
        if (s2(l) > v) b.push_back(static_cast<std::size_t>(l));
    }
    return cohen_kappa(std::move(a), std::move(b), static_cast<std::size_t>(s1.size()));
}

struct StabilitySurface {
    Matrix s_hat;
    std::size_t successful = 0;
    std::vector<std::string> warnings;
};

inline StabilitySurface stability_surface(const Matrix& X, const Vector& y, const LossSpec& loss,
                                          const TuneOptions& opts) {
    const auto n = static_cast<std::size_t>(X.rows());
    if (n < 4) {
        throw InvalidArgument("stability estimation needs at least 4 observations");
    }
    if (X.rows() != y.size()) {
        throw InvalidArgument("dimension mismatch: " + std::to_string(X.rows()) + " rows but " +
                              std::to_string(y.size()) + " responses");
    }
    if (opts.replications == 0) {
        throw InvalidArgument("number of stability splits must be positive");
    }
    for (double v : opts.v_grid) {
        if (!(v >= 0.0)) {
            throw InvalidArgument("selection thresholds must be nonnegative");
        }
    }

    const std::size_t B = opts.replications;
    const SplitPlan plan{opts.seed, B};
    std::vector<HalfScores> halves(2 * B);
    parallel_for(2 * B, [&](std::size_t job) {
        const std::size_t b = job / 2;
        const auto [first, second] = split_halves(plan, n, b);
        halves[job] = score_half(X, y, job % 2 == 0 ? first : second, loss, opts.lambda_grid, opts);
    });

    StabilitySurface out;
    out.s_hat = Matrix::Zero(static_cast<Eigen::Index>(opts.lambda_grid.size()),
                             static_cast<Eigen::Index>(opts.v_grid.size()));
    std::size_t unconverged = 0;
    for (std::size_t b = 0; b < B; ++b) {
        const auto& h1 = halves[2 * b];
        const auto& h2 = halves[2 * b + 1];
        unconverged += h1.unconverged + h2.unconverged;
        if (h1.failure || h2.failure) {
            out.warnings.push_back("split " + std::to_string(b + 1) + " skipped: " +
                                   (h1.failure ? *h1.failure : *h2.failure));
            continue;
        }
        ++out.successful;
        for (std::size_t i = 0; i < opts.lambda_grid.size(); ++i) {
            for (std::size_t k = 0; k < opts.v_grid.size(); ++k) {
                out.s_hat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) +=
                    kappa_at(h1.per_lambda[i], h2.per_lambda[i], opts.v_grid[k]);
            }
        }
    }
    if (out.successful == 0) {
        throw DegenerateBandwidth("every stability split had a degenerate bandwidth");
    }
    out.s_hat /= static_cast<double>(out.successful);
    if (unconverged > 0) {
        out.warnings.push_back(std::to_string(unconverged) + " half-sample fits hit the iteration cap");
    }
    return out;
}

inline void require_ascending_positive(const std::vector<double>& grid, const char* what) {
    if (grid.empty()) {
        throw InvalidArgument(std::string(what) + " grid is empty");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || !std::isfinite(grid[i])) {
            throw InvalidArgument(std::string(what) + " grid values must be positive");
        }
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw InvalidArgument(std::string(what) + " grid must be strictly ascending");
        }
    }
}

}  // namespace detail

/// Average kappa over the plan's B splits at a single (lambda, v).
inline double stability_estimate(const Matrix& X, const Vector& y, const LossSpec& loss, double lambda, double v,
                                 const SplitPlan& plan, const BandwidthConfig& bw = {},
                                 std::vector<std::string>* warnings = nullptr) {
    TuneOptions opts;
    opts.lambda_grid = {lambda};
    opts.v_grid = {v};
    opts.replications = plan.replications;
    opts.seed = plan.seed;
    opts.bandwidth = bw;
    auto surface = detail::stability_surface(X, y, loss, opts);
    if (warnings) {
        warnings->insert(warnings->end(), surface.warnings.begin(), surface.warnings.end());
    }
    return surface.s_hat(0, 0);
}

/// Tunes (lambda, v) on the stability surface and refits on the full sample.
inline StabilityReport tune(const Matrix& X, const Vector& y, const LossSpec& loss, const TuneOptions& opts = {}) {
    detail::require_ascending_positive(opts.lambda_grid, "lambda");
    detail::require_ascending_positive(opts.v_grid, "threshold");
    if (!(opts.q_fraction > 0.0 && opts.q_fraction <= 1.0)) {
        throw InvalidArgument("stability fraction q must lie in (0, 1]");
    }
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        require_label(loss, y(i));
    }

    auto surface = detail::stability_surface(X, y, loss, opts);
    const ParameterChoice choice = choose_parameters(surface.s_hat, opts.q_fraction);

    StabilityReport report;
    report.lambda_grid = opts.lambda_grid;
    report.v_grid = opts.v_grid;
    report.s_hat = std::move(surface.s_hat);
    report.chosen_lambda = opts.lambda_grid[choice.lambda_index];
    report.chosen_v = opts.v_grid[choice.v_index];
    report.q_fraction = opts.q_fraction;
    report.successful_replications = surface.successful;
    report.warnings = std::move(surface.warnings);

    const double sigma = resolve_bandwidth(opts.bandwidth, X);
    const GramMatrix G = gram(X, sigma);
    const FittedModel model = fit_with_gram(X, G, y, loss, report.chosen_lambda, opts.solver);
    if (!model.converged()) {
        report.warnings.push_back("final fit hit the iteration cap");
    }
    report.bandwidth = sigma;
    report.final_scores = gradient_scores(model, G);
    report.final_active_set = select(report.final_scores, report.chosen_v);
    return report;
}

}  // namespace rkhs_sparse
