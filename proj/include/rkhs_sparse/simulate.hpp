#pragma once

// Synthetic designs with known informative coordinates, selection metrics,
// and a replicated benchmark runner.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "rkhs_sparse/error.hpp"
#include "rkhs_sparse/gradient.hpp"
#include "rkhs_sparse/kernel.hpp"
#include "rkhs_sparse/loss.hpp"
#include "rkhs_sparse/random.hpp"
#include "rkhs_sparse/stability.hpp"

namespace rkhs_sparse {

enum class Example { regression1, classification2 };

inline std::string_view example_name(Example e) {
    return e == Example::regression1 ? "regression1" : "classification2";
}

inline Example parse_example(std::string_view name) {
    if (name == "regression1" || name == "1") return Example::regression1;
    if (name == "classification2" || name == "2") return Example::classification2;
    throw InvalidArgument("unknown example '" + std::string(name) + "'");
}

struct DGPConfig {
    Example example = Example::regression1;
    std::size_t n = 400;
    std::size_t p = 500;
    double eta = 0.0;  // shared-factor weight; 0 gives independent coordinates
    std::uint64_t seed = 0;
    double noise_scale = 1.0;  // regression noise sd; 0 switches the noise off
};

struct SimulatedData {
    Matrix X;
    Vector y;
    std::vector<std::size_t> true_set;  // 0-based
};

namespace sim {

inline double f4(double u) {
    const double s = std::sin(std::numbers::pi * u);
    const double c = std::cos(std::numbers::pi * u);
    return 0.1 * s + 0.2 * c + 0.3 * s * s + 0.4 * c * c * c + 0.5 * s * s * s;
}

inline double f5(double u) {
    const double s = std::sin(std::numbers::pi * u);
    return s / (2.0 - s);
}

/// Noise-free regression function of the first design.
inline double regression1_mean(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    return 8.0 * x(0) + 4.0 * (2.0 * x(1) + 1.0) * (2.0 * x(2) - 1.0) + 6.0 * f4(x(3)) + 5.0 * f5(x(4));
}

/// Conditional logit of the second design.
inline double classification2_logit(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    constexpr double pi = std::numbers::pi;
    const double x1 = x(0);
    const double x2 = x(1);
    return 8.0 * x1 - pi * std::cos(pi * x1) + 6.0 * x2 + 8.0 * x2 * x2 * x2 + 3.0 * std::sin(2.0 * pi * (x1 - x2)) -
           8.0;
}

/// x_ij = (W_ij + eta U_i) / (1 + eta) with W, U iid uniform on [lo, hi).
inline Matrix factor_design(Rng& rng, std::size_t n, std::size_t p, double eta, double lo, double hi) {
    Matrix X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double u = rng.uniform(lo, hi);
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            X(i, j) = (rng.uniform(lo, hi) + eta * u) / (1.0 + eta);
        }
    }
    return X;
}

inline void check_config(const DGPConfig& cfg, std::size_t min_p) {
    if (cfg.p < min_p) {
        throw InvalidArgument(std::string(example_name(cfg.example)) + " needs p >= " + std::to_string(min_p));
    }
    if (cfg.n < 1) {
        throw InvalidArgument("simulated sample size must be positive");
    }
    if (!(cfg.eta >= 0.0)) {
        throw InvalidArgument("correlation weight eta must be nonnegative");
    }
}

}  // namespace sim

inline SimulatedData gen_example1(const DGPConfig& cfg) {
    sim::check_config(cfg, 5);
    Rng rng(cfg.seed);
    SimulatedData d;
    d.X = sim::factor_design(rng, cfg.n, cfg.p, cfg.eta, -0.5, 0.5);
    d.y.resize(d.X.rows());
    for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
        const double noise = rng.normal();
        d.y(i) = sim::regression1_mean(d.X.row(i)) + cfg.noise_scale * noise;
    }
    d.true_set = {0, 1, 2, 3, 4};
    return d;
}

/// Labels are +1 with probability 1 / (1 + exp(-logit)), otherwise -1.
inline SimulatedData gen_example2(const DGPConfig& cfg) {
    sim::check_config(cfg, 2);
    Rng rng(cfg.seed);
    SimulatedData d;
    d.X = sim::factor_design(rng, cfg.n, cfg.p, cfg.eta, 0.0, 1.0);
    d.y.resize(d.X.rows());
    for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
        const double prob = 1.0 / (1.0 + std::exp(-sim::classification2_logit(d.X.row(i))));
        d.y(i) = rng.bernoulli(prob) ? 1.0 : -1.0;
    }
    d.true_set = {0, 1};
    return d;
}

inline SimulatedData generate(const DGPConfig& cfg) {
    return cfg.example == Example::regression1 ? gen_example1(cfg) : gen_example2(cfg);
}

enum class FitClass { correct, under, over };

inline char fit_class_letter(FitClass c) {
    switch (c) {
        case FitClass::correct: return 'C';
        case FitClass::under: return 'U';
        case FitClass::over: return 'O';
    }
    return '?';
}

struct SelectionMetrics {
    double size = 0.0;
    double tp = 0.0;
    double fp = 0.0;
    FitClass fit_class = FitClass::correct;
};

inline SelectionMetrics evaluate_selection(const ActiveSet& selected, const std::vector<std::size_t>& true_set) {
    SelectionMetrics m;
    for (std::size_t l : selected.indices) {
        if (std::find(true_set.begin(), true_set.end(), l) != true_set.end()) {
            m.tp += 1.0;
        } else {
            m.fp += 1.0;
        }
    }
    m.size = m.tp + m.fp;
    if (m.tp < static_cast<double>(true_set.size())) {
        m.fit_class = FitClass::under;
    } else if (m.fp == 0.0) {
        m.fit_class = FitClass::correct;
    } else {
        m.fit_class = FitClass::over;
    }
    return m;
}

/// Table label of the method for a loss, e.g. "MF-SQ".
inline std::string method_label(const LossSpec& loss) {
    switch (loss.kind) {
        case LossKind::square: return "MF-SQ";
        case LossKind::check: return "MF-QA";
        case LossKind::eps_insensitive: return "MF-EPS";
        case LossKind::logistic: return "MF-LOG";
        case LossKind::hinge: return "MF-SVM";
    }
    return "MF";
}

struct ReplicationOutcome {
    std::size_t replication = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    SelectionMetrics metrics;
    std::vector<std::size_t> selected;
    double chosen_lambda = 0.0;
    double chosen_v = 0.0;
};

struct BenchmarkRow {
    DGPConfig scenario;
    std::string method;
    std::size_t reps = 0;
    std::size_t failed = 0;
    double size = 0.0;  // averages over successful replications
    double tp = 0.0;
    double fp = 0.0;
    std::size_t correct = 0;
    std::size_t under = 0;
    std::size_t over = 0;
    std::vector<ReplicationOutcome> replications;
};

/// Runs generate -> tune -> select for each replication. Replication r uses
/// data seed derive_seed(scenario.seed, 2r) and split seed
/// derive_seed(scenario.seed, 2r + 1); opts.seed is ignored.
inline BenchmarkRow run_benchmark(const DGPConfig& scenario, const LossSpec& loss, std::size_t reps,
                                  const TuneOptions& opts = {}) {
    if (reps < 1) {
        throw InvalidArgument("benchmark needs at least one replication");
    }
    BenchmarkRow row;
    row.scenario = scenario;
    row.method = method_label(loss);
    row.reps = reps;

    for (std::size_t r = 0; r < reps; ++r) {
        ReplicationOutcome out;
        out.replication = r + 1;
        DGPConfig cfg = scenario;
        cfg.seed = derive_seed(scenario.seed, 2 * r);
        out.seed = cfg.seed;
        try {
            const SimulatedData data = generate(cfg);
            TuneOptions t = opts;
            t.seed = derive_seed(scenario.seed, 2 * r + 1);
            const StabilityReport report = tune(data.X, data.y, loss, t);
            out.metrics = evaluate_selection(report.final_active_set, data.true_set);
            out.selected = report.final_active_set.indices;
            out.chosen_lambda = report.chosen_lambda;
            out.chosen_v = report.chosen_v;
        } catch (const NumericalError& e) {
            out.failed = true;
            out.error = e.what();
        }
        row.replications.push_back(std::move(out));
    }

    std::size_t ok = 0;
    for (const auto& out : row.replications) {
        if (out.failed) {
            ++row.failed;
            continue;
        }
        ++ok;
        row.size += out.metrics.size;
        row.tp += out.metrics.tp;
        row.fp += out.metrics.fp;
        switch (out.metrics.fit_class) {
            case FitClass::correct: ++row.correct; break;
            case FitClass::under: ++row.under; break;
            case FitClass::over: ++row.over; break;
        }
    }
    if (ok > 0) {
        row.size /= static_cast<double>(ok);
        row.tp /= static_cast<double>(ok);
        row.fp /= static_cast<double>(ok);
    }
    return row;
}

}  // namespace rkhs_sparse
