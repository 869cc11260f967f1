#pragma once

// Machine-readable reports. Keys are emitted in a fixed order and variable
// indices are 1-based.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rkhs_sparse/error.hpp"
#include "rkhs_sparse/gradient.hpp"
#include "rkhs_sparse/loss.hpp"
#include "rkhs_sparse/simulate.hpp"
#include "rkhs_sparse/stability.hpp"

namespace rkhs_sparse {

using ordered_json = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;

struct LossDescriptor {
    std::string kind = "square";
    std::optional<double> tau;
    std::optional<double> epsilon;

    bool operator==(const LossDescriptor&) const = default;
};

inline LossDescriptor describe(const LossSpec& loss) {
    LossDescriptor d{std::string(loss_name(loss.kind)), std::nullopt, std::nullopt};
    if (loss.kind == LossKind::check) d.tau = loss.tau;
    if (loss.kind == LossKind::eps_insensitive) d.epsilon = loss.epsilon;
    return d;
}

struct StabilityCurve {
    std::vector<double> lambda_grid;
    std::vector<double> v_grid;
    std::vector<std::vector<double>> s_hat;  // [lambda][v]
    double q_fraction = 0.9;
    std::size_t splits = 0;
    std::size_t successful_splits = 0;
    std::uint64_t seed = 0;

    bool operator==(const StabilityCurve&) const = default;
};

struct SelectionReport {
    int schema_version = kReportSchemaVersion;
    std::string command;
    std::size_t n = 0;
    std::size_t p = 0;
    LossDescriptor loss;
    double bandwidth = 0.0;
    std::optional<double> chosen_lambda;
    std::optional<double> chosen_v;
    std::vector<std::string> variables;
    std::vector<double> scores;
    std::vector<double> normalized_scores;
    std::vector<std::size_t> active_set;  // 1-based, sorted
    std::optional<StabilityCurve> stability_curve;
    std::vector<std::string> warnings;

    bool operator==(const SelectionReport&) const = default;
};

inline std::vector<double> max_normalized(const std::vector<double>& scores) {
    double mx = 0.0;
    for (double s : scores) mx = std::max(mx, s);
    std::vector<double> out(scores.size(), 0.0);
    if (mx > 0.0) {
        for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] / mx;
    }
    return out;
}

inline void set_scores(SelectionReport& r, const GradientScores& s) {
    r.scores.assign(s.scores.data(), s.scores.data() + s.scores.size());
    r.normalized_scores = max_normalized(r.scores);
}

inline void set_active_set(SelectionReport& r, const ActiveSet& a) {
    r.active_set.clear();
    for (std::size_t l : a.indices) r.active_set.push_back(l + 1);
}

inline StabilityCurve make_curve(const StabilityReport& rep, std::size_t splits, std::uint64_t seed) {
    StabilityCurve c;
    c.lambda_grid = rep.lambda_grid;
    c.v_grid = rep.v_grid;
    for (Eigen::Index i = 0; i < rep.s_hat.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(rep.s_hat.cols()));
        for (Eigen::Index k = 0; k < rep.s_hat.cols(); ++k) {
            row[static_cast<std::size_t>(k)] = rep.s_hat(i, k);
        }
        c.s_hat.push_back(std::move(row));
    }
    c.q_fraction = rep.q_fraction;
    c.splits = splits;
    c.successful_splits = rep.successful_replications;
    c.seed = seed;
    return c;
}

namespace detail {

template <typename T>
ordered_json optional_json(const std::optional<T>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const ordered_json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<T>();
}

}  // namespace detail

inline ordered_json to_json(const LossDescriptor& d) {
    ordered_json j;
    j["kind"] = d.kind;
    j["tau"] = detail::optional_json(d.tau);
    j["epsilon"] = detail::optional_json(d.epsilon);
    return j;
}

inline ordered_json to_json(const StabilityCurve& c) {
    ordered_json j;
    j["lambda_grid"] = c.lambda_grid;
    j["v_grid"] = c.v_grid;
    j["s_hat"] = c.s_hat;
    j["q_fraction"] = c.q_fraction;
    j["splits"] = c.splits;
    j["successful_splits"] = c.successful_splits;
    j["seed"] = c.seed;
    return j;
}

inline ordered_json to_json(const SelectionReport& r) {
    ordered_json j;
    j["schema_version"] = r.schema_version;
    j["command"] = r.command;
    j["n"] = r.n;
    j["p"] = r.p;
    j["loss"] = to_json(r.loss);
    j["bandwidth"] = r.bandwidth;
    j["chosen_lambda"] = detail::optional_json(r.chosen_lambda);
    j["chosen_v"] = detail::optional_json(r.chosen_v);
    j["variables"] = r.variables;
    j["scores"] = ordered_json{{"raw", r.scores}, {"normalized", r.normalized_scores}};
    j["active_set"] = r.active_set;
    j["stability_curve"] = r.stability_curve ? to_json(*r.stability_curve) : ordered_json(nullptr);
    j["warnings"] = r.warnings;
    return j;
}

inline SelectionReport report_from_json(const ordered_json& j) {
    try {
        SelectionReport r;
        r.schema_version = j.at("schema_version").get<int>();
        if (r.schema_version != kReportSchemaVersion) {
            throw InvalidArgument("unsupported report schema version " + std::to_string(r.schema_version));
        }
        r.command = j.at("command").get<std::string>();
        r.n = j.at("n").get<std::size_t>();
        r.p = j.at("p").get<std::size_t>();
        const auto& l = j.at("loss");
        r.loss = {l.at("kind").get<std::string>(), detail::optional_from<double>(l.at("tau")),
                  detail::optional_from<double>(l.at("epsilon"))};
        r.bandwidth = j.at("bandwidth").get<double>();
        r.chosen_lambda = detail::optional_from<double>(j.at("chosen_lambda"));
        r.chosen_v = detail::optional_from<double>(j.at("chosen_v"));
        r.variables = j.at("variables").get<std::vector<std::string>>();
        r.scores = j.at("scores").at("raw").get<std::vector<double>>();
        r.normalized_scores = j.at("scores").at("normalized").get<std::vector<double>>();
        r.active_set = j.at("active_set").get<std::vector<std::size_t>>();
        if (const auto& c = j.at("stability_curve"); !c.is_null()) {
            StabilityCurve sc;
            sc.lambda_grid = c.at("lambda_grid").get<std::vector<double>>();
            sc.v_grid = c.at("v_grid").get<std::vector<double>>();
            sc.s_hat = c.at("s_hat").get<std::vector<std::vector<double>>>();
            sc.q_fraction = c.at("q_fraction").get<double>();
            sc.splits = c.at("splits").get<std::size_t>();
            sc.successful_splits = c.at("successful_splits").get<std::size_t>();
            sc.seed = c.at("seed").get<std::uint64_t>();
            r.stability_curve = std::move(sc);
        }
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed report: ") + e.what());
    }
}

/// One row per variable: index, name, raw score, normalized score, selected.
inline void write_csv(std::ostream& out, const SelectionReport& r) {
    out << "index,name,score,normalized_score,selected\n";
    std::ostringstream line;
    line.precision(17);
    for (std::size_t l = 0; l < r.scores.size(); ++l) {
        const bool selected = std::find(r.active_set.begin(), r.active_set.end(), l + 1) != r.active_set.end();
        line.str("");
        line << (l + 1) << ',' << (l < r.variables.size() ? r.variables[l] : "") << ',' << r.scores[l] << ','
             << r.normalized_scores[l] << ',' << (selected ? 1 : 0) << '\n';
        out << line.str();
    }
}

// Benchmark rows

inline ordered_json to_json(const BenchmarkRow& row, const LossSpec& loss) {
    ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = "simulate";
    j["scenario"] = ordered_json{{"example", std::string(example_name(row.scenario.example))},
                                 {"n", row.scenario.n},
                                 {"p", row.scenario.p},
                                 {"eta", row.scenario.eta},
                                 {"seed", row.scenario.seed}};
    j["method"] = row.method;
    j["loss"] = to_json(describe(loss));
    j["reps"] = row.reps;
    j["failed"] = row.failed;
    j["size"] = row.size;
    j["tp"] = row.tp;
    j["fp"] = row.fp;
    j["C"] = row.correct;
    j["U"] = row.under;
    j["O"] = row.over;
    ordered_json reps = ordered_json::array();
    for (const auto& r : row.replications) {
        ordered_json e;
        e["replication"] = r.replication;
        e["seed"] = r.seed;
        if (r.failed) {
            e["error"] = r.error;
        } else {
            std::vector<std::size_t> sel;
            for (std::size_t l : r.selected) sel.push_back(l + 1);
            e["selected"] = sel;
            e["tp"] = r.metrics.tp;
            e["fp"] = r.metrics.fp;
            e["fit_class"] = std::string(1, fit_class_letter(r.metrics.fit_class));
            e["chosen_lambda"] = r.chosen_lambda;
            e["chosen_v"] = r.chosen_v;
        }
        reps.push_back(std::move(e));
    }
    j["replications"] = std::move(reps);
    return j;
}

/// Table-style row: (n,p,eta), method, Size, TP, FP, C, U, O, failed.
inline void write_csv(std::ostream& out, const BenchmarkRow& row) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(2);
    s << "n,p,eta,method,size,tp,fp,C,U,O,failed\n";
    s << row.scenario.n << ',' << row.scenario.p << ',' << row.scenario.eta << ',' << row.method << ',' << row.size
      << ',' << row.tp << ',' << row.fp << ',' << row.correct << ',' << row.under << ',' << row.over << ','
      << row.failed << '\n';
    out << s.str();
}

}  // namespace rkhs_sparse
