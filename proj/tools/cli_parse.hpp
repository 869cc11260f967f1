#pragma once

#include <CLI11.hpp>

#include <charconv>
#include <iostream>
#include <string>
#include <vector>

#include "rkhs_sparse/cli.hpp"

namespace rkhs_sparse::tool {

/// "lo:hi:step" in base-10 exponents, e.g. "-3:3:0.1".
inline std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> parts;
    std::size_t start = 0;
    while (true) {
        const auto colon = text.find(':', start);
        const std::string piece = text.substr(start, colon == std::string::npos ? colon : colon - start);
        const auto value = csv::parse_number(csv::trim(piece));
        if (!value) {
            throw InvalidArgument("grid '" + text + "' must look like lo:hi:step");
        }
        parts.push_back(*value);
        if (colon == std::string::npos) break;
        start = colon + 1;
    }
    if (parts.size() != 3) {
        throw InvalidArgument("grid '" + text + "' must look like lo:hi:step");
    }
    return log_grid(parts[0], parts[1], parts[2]);
}

/// Comma-separated 1-based indices; the empty string is the empty set.
inline std::vector<std::size_t> parse_index_list(const std::string& text) {
    std::vector<std::size_t> out;
    if (csv::trim(text).empty()) return out;
    for (auto cell : csv::split_line(text)) {
        std::size_t v = 0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
            throw InvalidArgument("bad index '" + std::string(cell) + "' in list '" + text + "'");
        }
        out.push_back(v);
    }
    return out;
}

/// Parses argv and runs the command; returns the process exit code.
inline int main_entry(int argc, const char* const* argv, std::ostream& out = std::cout,
                      std::ostream& err = std::cerr) {
    CLI::App app{"Sparse learning in a Gaussian-kernel RKHS: gradient-based variable selection "
                 "with stability tuning"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string loss_name = "square";
    double tau = 0.5;
    double epsilon = 0.1;
    std::string lambda_grid;
    std::string v_grid;
    std::string format = "json";
    std::string kappa_format = "csv";
    std::string example = "regression1";
    std::string set_a;
    std::string set_b;

    auto add_output = [&](CLI::App* sub) {
        sub->add_option("--out", cfg.output_path, "Write the report here instead of stdout");
        sub->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}));
    };
    auto add_loss = [&](CLI::App* sub) {
        sub->add_option("--loss", loss_name, "Loss function")
            ->check(CLI::IsMember({"square", "check", "eps", "logistic", "hinge"}));
        sub->add_option("--tau", tau, "Quantile level of the check loss");
        sub->add_option("--epsilon", epsilon, "Tube width of the eps-insensitive loss");
        sub->add_option("--sigma", cfg.sigma, "Fixed kernel bandwidth (default: median pairwise distance)");
    };
    auto add_data = [&](CLI::App* sub) {
        sub->add_option("input", cfg.input_path, "CSV file")->required();
        sub->add_option("--response", cfg.response, "Response column: header name or 1-based index (default: last)");
    };
    auto add_tuning = [&](CLI::App* sub) {
        auto* lam = sub->add_option("--lambda", cfg.lambda, "Single regularization value");
        auto* lamg = sub->add_option("--lambda-grid", lambda_grid, "Regularization grid lo:hi:step in log10 units");
        lam->excludes(lamg);
        auto* v = sub->add_option("--v", cfg.v, "Single selection threshold");
        auto* vg = sub->add_option("--v-grid", v_grid, "Threshold grid lo:hi:step in log10 units");
        v->excludes(vg);
        sub->add_option("--splits", cfg.splits, "Number of random half-splits B")->check(CLI::PositiveNumber);
        sub->add_option("--stability-q", cfg.q_fraction, "Fraction q of the maximal stability to retain");
        sub->add_option("--seed", cfg.seed, "Seed for all randomness");
    };

    auto* fit_cmd = app.add_subcommand("fit", "Fit once at a given lambda and report gradient scores");
    add_data(fit_cmd);
    add_loss(fit_cmd);
    fit_cmd->add_option("--lambda", cfg.lambda, "Regularization parameter")->required();
    fit_cmd->add_option("--v", cfg.v, "Selection threshold (optional)");
    add_output(fit_cmd);

    auto* select_cmd = app.add_subcommand("select", "Tune by selection stability and select variables");
    add_data(select_cmd);
    add_loss(select_cmd);
    add_tuning(select_cmd);
    add_output(select_cmd);

    auto* tune_cmd = app.add_subcommand("tune", "Compute the stability surface and the tuned parameters");
    add_data(tune_cmd);
    add_loss(tune_cmd);
    add_tuning(tune_cmd);
    add_output(tune_cmd);

    auto* sim_cmd = app.add_subcommand("simulate", "Benchmark row on a synthetic design");
    sim_cmd->add_option("--example", example, "Design")->check(CLI::IsMember({"regression1", "classification2"}));
    sim_cmd->add_option("--n", cfg.sim_n, "Sample size")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--p", cfg.sim_p, "Number of predictors")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--eta", cfg.eta, "Correlation weight");
    sim_cmd->add_option("--reps", cfg.reps, "Replications")->check(CLI::PositiveNumber);
    sim_cmd->add_flag("--full", cfg.full, "Run all 50 replications");
    add_loss(sim_cmd);
    add_tuning(sim_cmd);
    add_output(sim_cmd);

    auto* kappa_cmd = app.add_subcommand("kappa", "Cohen's kappa between two index sets");
    kappa_cmd->add_option("--a", set_a, "First set, e.g. 1,2")->required();
    kappa_cmd->add_option("--b", set_b, "Second set, e.g. 1,3")->required();
    kappa_cmd->add_option("--p", cfg.kappa_p, "Number of variables")->required();
    kappa_cmd->add_option("--format", kappa_format, "Output format")->check(CLI::IsMember({"json", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*kappa_cmd) {
            cfg.command = Command::kappa;
            cfg.set_a = parse_index_list(set_a);
            cfg.set_b = parse_index_list(set_b);
            format = kappa_format;
        } else {
            cfg.command = *fit_cmd ? Command::fit
                          : *select_cmd ? Command::select
                          : *tune_cmd ? Command::tune
                                      : Command::simulate;
            if (!*fit_cmd && !lambda_grid.empty()) cfg.lambda_grid = parse_grid(lambda_grid);
            if (!*fit_cmd && !v_grid.empty()) cfg.v_grid = parse_grid(v_grid);
            switch (parse_loss_kind(loss_name)) {
                case LossKind::square: cfg.loss = LossSpec::square(); break;
                case LossKind::check: cfg.loss = LossSpec::check(tau); break;
                case LossKind::eps_insensitive: cfg.loss = LossSpec::eps_insensitive(epsilon); break;
                case LossKind::logistic: cfg.loss = LossSpec::logistic(); break;
                case LossKind::hinge: cfg.loss = LossSpec::hinge(); break;
            }
            cfg.example = parse_example(example);
        }
        cfg.format = format == "csv" ? OutputFormat::csv : OutputFormat::json;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return run(cfg, out, err);
}

}  // namespace rkhs_sparse::tool
