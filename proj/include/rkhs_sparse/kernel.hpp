#pragma once

// Gaussian kernel K(u, v) = exp(-|u - v|^2 / (2 sigma^2)), its Gram
// matrices, and the coordinate-wise derivative kernel d/dx^l K(x_i, x).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rkhs_sparse/error.hpp"
#include "rkhs_sparse/random.hpp"

namespace rkhs_sparse {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct BandwidthConfig {
    enum class Mode { median_heuristic, fixed };

    Mode mode = Mode::median_heuristic;
    double fixed_value = 1.0;

    static BandwidthConfig median() { return {}; }
    static BandwidthConfig fixed(double sigma) {
        if (!(sigma > 0.0) || !std::isfinite(sigma)) {
            throw InvalidArgument("fixed bandwidth must be positive and finite");
        }
        return {Mode::fixed, sigma};
    }
};

/// Symmetric Gram matrix with unit diagonal, tagged with its bandwidth.
struct GramMatrix {
    Matrix entries;
    double bandwidth = 1.0;

    Eigen::Index size() const { return entries.rows(); }
};

/// Entry (i, j) is dK(x_i, x)/dx^l evaluated at x = x_j. `coordinate` is 0-based.
struct DerivKernelMatrix {
    std::size_t coordinate = 0;
    Matrix entries;
};

namespace detail {

inline void require_finite(const Matrix& X, const char* what) {
    if (!X.allFinite()) {
        throw InvalidArgument(std::string(what) + " contains non-finite values");
    }
}

inline void require_sigma(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw InvalidArgument("kernel bandwidth must be positive and finite");
    }
}

/// Squared Euclidean distances between the rows of A and the rows of B.
/// Rows are shifted by A's first row first, which keeps the expansion
/// |a|^2 + |b|^2 - 2ab well conditioned; negatives from rounding clamp to 0.
inline Matrix squared_distances(const Matrix& A, const Matrix& B) {
    const Eigen::RowVectorXd shift = A.row(0);
    const Matrix As = A.rowwise() - shift;
    const Matrix Bs = B.rowwise() - shift;
    const Vector a2 = As.rowwise().squaredNorm();
    const Vector b2 = Bs.rowwise().squaredNorm();
    Matrix d2 = -2.0 * (As * Bs.transpose());
    d2.colwise() += a2;
    d2.rowwise() += b2.transpose();
    return d2.cwiseMax(0.0);
}

inline double median_of(std::vector<double>& values) {
    const std::size_t m = values.size();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(m / 2);
    std::nth_element(values.begin(), mid, values.end());
    const double upper = *mid;
    if (m % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(values.begin(), mid);
    return 0.5 * (lower + upper);
}

}  // namespace detail

/// Above this many rows the median heuristic samples pairs instead of
/// enumerating all n(n-1)/2 of them.
inline constexpr Eigen::Index kExactMedianLimit = 5000;
inline constexpr std::size_t kMedianSamplePairs = 1'000'000;
inline constexpr std::uint64_t kMedianSampleSeed = 0x5eed'b4d0'0001ULL;

/// Median of the pairwise Euclidean distances between the rows of X.
inline double median_bandwidth(const Matrix& X) {
    const Eigen::Index n = X.rows();
    if (n < 2) {
        throw InvalidArgument("median bandwidth needs at least two rows");
    }
    detail::require_finite(X, "predictor matrix");

    std::vector<double> dist;
    if (n <= kExactMedianLimit) {
        const Matrix d2 = detail::squared_distances(X, X);
        dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
        for (Eigen::Index j = 1; j < n; ++j) {
            for (Eigen::Index i = 0; i < j; ++i) {
                dist.push_back(std::sqrt(d2(i, j)));
            }
        }
    } else {
        Rng rng(kMedianSampleSeed);
        dist.reserve(kMedianSamplePairs);
        const auto un = static_cast<std::uint64_t>(n);
        while (dist.size() < kMedianSamplePairs) {
            const auto i = static_cast<Eigen::Index>(rng.below(un));
            const auto j = static_cast<Eigen::Index>(rng.below(un));
            if (i != j) {
                dist.push_back((X.row(i) - X.row(j)).norm());
            }
        }
    }

    const double med = detail::median_of(dist);
    if (!(med > 0.0)) {
        throw DegenerateBandwidth("median pairwise distance is zero; cannot set kernel bandwidth");
    }
    return med;
}

inline double resolve_bandwidth(const BandwidthConfig& cfg, const Matrix& X) {
    if (cfg.mode == BandwidthConfig::Mode::fixed) {
        detail::require_sigma(cfg.fixed_value);
        return cfg.fixed_value;
    }
    return median_bandwidth(X);
}

inline double gaussian_kernel(const Eigen::Ref<const Eigen::RowVectorXd>& u,
                              const Eigen::Ref<const Eigen::RowVectorXd>& v, double sigma) {
    return std::exp(-(u - v).squaredNorm() / (2.0 * sigma * sigma));
}

/// Cross-kernel matrix with entry (i, j) = K(a_i, b_j).
inline Matrix cross_kernel(const Matrix& A, const Matrix& B, double sigma) {
    detail::require_sigma(sigma);
    if (A.cols() != B.cols()) {
        throw InvalidArgument("dimension mismatch: kernel arguments have " + std::to_string(A.cols()) +
                              " and " + std::to_string(B.cols()) + " columns");
    }
    detail::require_finite(A, "kernel argument");
    detail::require_finite(B, "kernel argument");
    if (A.rows() == 0 || B.rows() == 0) {
        return Matrix(A.rows(), B.rows());
    }
    const double scale = -1.0 / (2.0 * sigma * sigma);
    return (detail::squared_distances(A, B) * scale).array().exp().matrix();
}

inline GramMatrix gram(const Matrix& X, double sigma) {
    GramMatrix G{cross_kernel(X, X, sigma), sigma};
    // exact symmetry and unit diagonal regardless of rounding in the expansion
    const Eigen::Index n = X.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        G.entries(j, j) = 1.0;
        for (Eigen::Index i = 0; i < j; ++i) {
            G.entries(j, i) = G.entries(i, j);
        }
    }
    return G;
}

/// (K(x_1, x), ..., K(x_n, x)).
inline Vector kernel_vector(const Matrix& X_train, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                            double sigma) {
    detail::require_sigma(sigma);
    if (X_train.cols() != x.size()) {
        throw InvalidArgument("dimension mismatch: point has " + std::to_string(x.size()) +
                              " coordinates, training data has " + std::to_string(X_train.cols()));
    }
    Vector k(X_train.rows());
    for (Eigen::Index i = 0; i < X_train.rows(); ++i) {
        k(i) = gaussian_kernel(X_train.row(i), x, sigma);
    }
    return k;
}

/// Derivative kernel matrix for one 0-based coordinate:
/// entry (i, j) = K(x_i, x_j) (x_i^l - x_j^l) / sigma^2.
inline DerivKernelMatrix deriv_kernel_matrix(const GramMatrix& G, const Matrix& X, std::size_t coordinate) {
    if (coordinate >= static_cast<std::size_t>(X.cols())) {
        throw InvalidArgument("coordinate index " + std::to_string(coordinate + 1) + " out of range 1.." +
                              std::to_string(X.cols()));
    }
    if (G.size() != X.rows()) {
        throw InvalidArgument("dimension mismatch: Gram matrix does not match predictor rows");
    }
    const auto l = static_cast<Eigen::Index>(coordinate);
    const double inv_s2 = 1.0 / (G.bandwidth * G.bandwidth);
    const Eigen::Index n = X.rows();
    DerivKernelMatrix D{coordinate, Matrix(n, n)};
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            D.entries(i, j) = G.entries(i, j) * (X(i, l) - X(j, l)) * inv_s2;
        }
    }
    return D;
}

inline DerivKernelMatrix deriv_kernel_matrix(const Matrix& X, double sigma, std::size_t coordinate) {
    if (coordinate >= static_cast<std::size_t>(X.cols())) {
        throw InvalidArgument("coordinate index " + std::to_string(coordinate + 1) + " out of range 1.." +
                              std::to_string(X.cols()));
    }
    return deriv_kernel_matrix(gram(X, sigma), X, coordinate);
}

}  // namespace rkhs_sparse
