#pragma once

// Command execution behind the rkhs-sparse tool. Argument parsing lives in
// tools/; this header turns a validated RunConfig into a written report and an
// exit code: 0 success, 1 usage or input error, 2 numerical failure.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rkhs_sparse/csv.hpp"
#include "rkhs_sparse/error.hpp"
#include "rkhs_sparse/estimator.hpp"
#include "rkhs_sparse/gradient.hpp"
#include "rkhs_sparse/loss.hpp"
#include "rkhs_sparse/report.hpp"
#include "rkhs_sparse/simulate.hpp"
#include "rkhs_sparse/stability.hpp"

namespace rkhs_sparse {

enum class Command { fit, select, tune, simulate, kappa };
enum class OutputFormat { json, csv };

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

struct RunConfig {
    Command command = Command::select;
    std::string input_path;
    std::string response;  // name or 1-based index; empty means last column
    LossSpec loss{};
    std::optional<double> sigma;  // fixed bandwidth; median heuristic when absent
    std::optional<double> lambda;
    std::vector<double> lambda_grid = default_grid();
    std::optional<double> v;
    std::vector<double> v_grid = default_grid();
    std::size_t splits = 20;
    double q_fraction = 0.9;
    std::uint64_t seed = 0;
    std::string output_path;  // stdout when empty
    OutputFormat format = OutputFormat::json;

    // simulate
    Example example = Example::regression1;
    std::size_t sim_n = 400;
    std::size_t sim_p = 500;
    double eta = 0.0;
    std::size_t reps = 10;
    bool full = false;

    // kappa (1-based indices)
    std::vector<std::size_t> set_a;
    std::vector<std::size_t> set_b;
    std::size_t kappa_p = 0;
};

namespace detail {

inline BandwidthConfig bandwidth_of(const RunConfig& cfg) {
    return cfg.sigma ? BandwidthConfig::fixed(*cfg.sigma) : BandwidthConfig::median();
}

inline TuneOptions tune_options_of(const RunConfig& cfg) {
    TuneOptions t;
    t.lambda_grid = cfg.lambda ? std::vector<double>{*cfg.lambda} : cfg.lambda_grid;
    t.v_grid = cfg.v ? std::vector<double>{*cfg.v} : cfg.v_grid;
    t.replications = cfg.splits;
    t.q_fraction = cfg.q_fraction;
    t.seed = cfg.seed;
    t.bandwidth = bandwidth_of(cfg);
    return t;
}

inline SelectionReport base_report(const RunConfig& cfg, const Dataset& d, std::string command) {
    SelectionReport r;
    r.command = std::move(command);
    r.n = static_cast<std::size_t>(d.X.rows());
    r.p = static_cast<std::size_t>(d.X.cols());
    r.loss = describe(cfg.loss);
    r.variables = d.column_names;
    return r;
}

inline std::string render(const SelectionReport& r, OutputFormat format) {
    std::ostringstream s;
    if (format == OutputFormat::csv) {
        write_csv(s, r);
    } else {
        s << to_json(r).dump(2) << '\n';
    }
    return s.str();
}

inline std::string run_fit(const RunConfig& cfg) {
    if (!cfg.lambda) {
        throw InvalidArgument("fit needs --lambda");
    }
    const Dataset d = load_csv(cfg.input_path, cfg.response);
    const FittedModel model = fit(d.X, d.y, cfg.loss, *cfg.lambda, bandwidth_of(cfg));
    const GradientScores scores = gradient_scores(model);

    SelectionReport r = base_report(cfg, d, "fit");
    r.bandwidth = model.sigma();
    r.chosen_lambda = model.lambda();
    set_scores(r, scores);
    if (cfg.v) {
        r.chosen_v = *cfg.v;
        set_active_set(r, select(scores, *cfg.v));
    }
    if (!model.converged()) {
        r.warnings.push_back("solver hit the iteration cap after " + std::to_string(model.solver_iterations()) +
                             " iterations");
    }
    return render(r, cfg.format);
}

inline std::string run_tune(const RunConfig& cfg, bool with_selection) {
    const Dataset d = load_csv(cfg.input_path, cfg.response);
    const StabilityReport rep = tune(d.X, d.y, cfg.loss, tune_options_of(cfg));

    SelectionReport r = base_report(cfg, d, with_selection ? "select" : "tune");
    r.bandwidth = rep.bandwidth;
    r.chosen_lambda = rep.chosen_lambda;
    r.chosen_v = rep.chosen_v;
    if (with_selection) {
        set_scores(r, rep.final_scores);
        set_active_set(r, rep.final_active_set);
    }
    r.stability_curve = make_curve(rep, cfg.splits, cfg.seed);
    r.warnings = rep.warnings;
    return render(r, cfg.format);
}

inline std::string run_simulate(const RunConfig& cfg) {
    DGPConfig scenario{cfg.example, cfg.sim_n, cfg.sim_p, cfg.eta, cfg.seed};
    const std::size_t reps = cfg.full ? 50 : cfg.reps;
    TuneOptions t = tune_options_of(cfg);
    const BenchmarkRow row = run_benchmark(scenario, cfg.loss, reps, t);
    std::ostringstream s;
    if (cfg.format == OutputFormat::csv) {
        write_csv(s, row);
    } else {
        s << to_json(row, cfg.loss).dump(2) << '\n';
    }
    return s.str();
}

inline std::string run_kappa(const RunConfig& cfg) {
    if (cfg.kappa_p == 0) {
        throw InvalidArgument("kappa needs --p >= 1");
    }
    auto to_zero_based = [&](const std::vector<std::size_t>& in) {
        std::vector<std::size_t> out;
        for (std::size_t l : in) {
            if (l < 1 || l > cfg.kappa_p) {
                throw InvalidArgument("index " + std::to_string(l) + " outside 1.." + std::to_string(cfg.kappa_p));
            }
            out.push_back(l - 1);
        }
        return out;
    };
    const double k = cohen_kappa(to_zero_based(cfg.set_a), to_zero_based(cfg.set_b), cfg.kappa_p);
    std::ostringstream s;
    if (cfg.format == OutputFormat::json) {
        s << ordered_json{{"kappa", k}}.dump() << '\n';
    } else {
        s << std::setprecision(15) << k << '\n';
    }
    return s.str();
}

}  // namespace detail

/// Executes one command. Diagnostics go to `err`; the report goes to
/// cfg.output_path, or to `out` when no path is set.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        std::string text;
        switch (cfg.command) {
            case Command::fit: text = detail::run_fit(cfg); break;
            case Command::select: text = detail::run_tune(cfg, true); break;
            case Command::tune: text = detail::run_tune(cfg, false); break;
            case Command::simulate: text = detail::run_simulate(cfg); break;
            case Command::kappa: text = detail::run_kappa(cfg); break;
        }
        if (cfg.output_path.empty()) {
            out << text;
        } else {
            std::ofstream file(cfg.output_path, std::ios::binary);
            if (!file || !(file << text)) {
                throw InvalidArgument("cannot write output file '" + cfg.output_path + "'");
            }
        }
        return kExitOk;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace rkhs_sparse
