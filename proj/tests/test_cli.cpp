#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli_parse.hpp"
#include "rkhs_sparse/cli.hpp"

using namespace rkhs_sparse;
namespace fs = std::filesystem;

namespace {

class TempDir {
  public:
    TempDir() : path_(fs::temp_directory_path() / ("rkhs_sparse_test_" + std::to_string(::getpid()) + "_" +
                                                   std::to_string(counter_++))) {
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }

    std::string write(const std::string& name, const std::string& text) const {
        const fs::path p = path_ / name;
        std::ofstream(p) << text;
        return p.string();
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

  private:
    static inline int counter_ = 0;
    fs::path path_;
};

struct Invocation {
    int code;
    std::string out;
    std::string err;
};

Invocation invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "rkhs-sparse");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = tool::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string example1_csv(const TempDir& dir, std::size_t n, std::size_t p, std::uint64_t seed) {
    const SimulatedData d = generate({Example::regression1, n, p, 0.0, seed});
    std::ostringstream s;
    s.precision(17);
    for (std::size_t l = 0; l < p; ++l) s << "x" << l + 1 << ',';
    s << "y\n";
    for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
        for (Eigen::Index l = 0; l < d.X.cols(); ++l) s << d.X(i, l) << ',';
        s << d.y(i) << '\n';
    }
    return dir.write("ex1.csv", s.str());
}

}  // namespace

TEST(LoadCsv, NumericWithoutHeader) {
    TempDir dir;
    const auto path = dir.write("a.csv", "1,2,3\n4,5,6\n7,8,9\n");
    const Dataset d = load_csv(path, "3");
    EXPECT_EQ(d.X.rows(), 3);
    EXPECT_EQ(d.X.cols(), 2);
    EXPECT_EQ(d.y, Eigen::Vector3d(3, 6, 9));
    EXPECT_EQ(d.column_names, (std::vector<std::string>{"x1", "x2"}));
    const Dataset first = load_csv(path, "1");
    EXPECT_EQ(first.y, Eigen::Vector3d(1, 4, 7));
    EXPECT_EQ(first.X(0, 0), 2.0);
    EXPECT_EQ(load_csv(path).y, d.y);
}

TEST(LoadCsv, HeaderNamesResolve) {
    TempDir dir;
    const auto path = dir.write("h.csv", "a, b ,y\n1,2,3\n4,5,6\n7,8,9\r\n\n");
    const Dataset d = load_csv(path, "y");
    EXPECT_EQ(d.X.rows(), 3);
    EXPECT_EQ(d.X.cols(), 2);
    EXPECT_EQ(d.column_names, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(d.response_name, "y");
    const Dataset b = load_csv(path, "b");
    EXPECT_EQ(b.column_names, (std::vector<std::string>{"a", "y"}));
    EXPECT_EQ(b.y(2), 8.0);
}

TEST(LoadCsv, NonNumericCellNamesLocation) {
    TempDir dir;
    const auto path = dir.write("na.csv", "a,b,y\n1,2,3\n4,NA,6\n");
    try {
        load_csv(path);
        FAIL() << "expected an error";
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("row 3, column 2"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("NA"), std::string::npos);
    }
}

TEST(LoadCsv, RejectsMalformedInput) {
    TempDir dir;
    EXPECT_THROW(load_csv(dir.file("missing.csv")), InvalidArgument);
    EXPECT_THROW(load_csv(dir.write("one.csv", "a,y\n1,2\n")), InvalidArgument);
    EXPECT_THROW(load_csv(dir.write("empty.csv", "")), InvalidArgument);
    EXPECT_THROW(load_csv(dir.write("ragged.csv", "1,2,3\n4,5\n")), InvalidArgument);
    EXPECT_THROW(load_csv(dir.write("col.csv", "1,2\n3,4\n"), "z"), InvalidArgument);
    EXPECT_THROW(load_csv(dir.write("idx.csv", "1,2\n3,4\n"), "3"), InvalidArgument);
    EXPECT_THROW(load_csv(dir.write("single.csv", "1\n2\n3\n")), InvalidArgument);
    EXPECT_THROW(load_csv(dir.write("inf.csv", "1,2\n3,inf\n")), InvalidArgument);
}

TEST(LoadCsv, DecimalPointOnlyAndNoThousandsSeparators) {
    TempDir dir;
    const Dataset d = load_csv(dir.write("dec.csv", "1.5,-2e-3,+3\n0.25,1E2,4\n"));
    EXPECT_EQ(d.X(0, 0), 1.5);
    EXPECT_EQ(d.X(0, 1), -2e-3);
    EXPECT_EQ(d.y(0), 3.0);
    EXPECT_EQ(d.X(1, 1), 100.0);
    // a decimal comma splits the cell, which then breaks the row shape
    EXPECT_THROW(load_csv(dir.write("comma.csv", "1,5;2\n3,4\n")), InvalidArgument);
    EXPECT_THROW(load_csv(dir.write("sep.csv", "a,y\n1 000,2\n3,4\n")), InvalidArgument);
    EXPECT_THROW(load_csv(dir.write("us.csv", "a,y\n1'000,2\n3,4\n")), InvalidArgument);
}

TEST(Report, JsonRoundTrip) {
    SelectionReport r;
    r.command = "select";
    r.n = 40;
    r.p = 3;
    r.loss = describe(LossSpec::check(0.25));
    r.bandwidth = 1.2345678901234567;
    r.chosen_lambda = 0.01;
    r.chosen_v = 0.1;
    r.variables = {"a", "b", "c"};
    r.scores = {0.5, 0.05, 1e-17};
    r.normalized_scores = max_normalized(r.scores);
    r.active_set = {1};
    r.stability_curve = StabilityCurve{{0.01, 0.1}, {0.1, 1.0}, {{0.5, 0.0}, {0.25, -0.1}}, 0.9, 20, 19, 7};
    r.warnings = {"split 3 skipped: degenerate"};
    const std::string text = to_json(r).dump(2);
    const SelectionReport back = report_from_json(ordered_json::parse(text));
    EXPECT_EQ(back, r);
    EXPECT_EQ(to_json(back).dump(2), text);

    SelectionReport minimal;
    minimal.command = "fit";
    EXPECT_EQ(report_from_json(to_json(minimal)), minimal);
    EXPECT_EQ(to_json(describe(LossSpec::check(0.25)))["tau"], 0.25);
    EXPECT_TRUE(to_json(describe(LossSpec::square()))["tau"].is_null());
}

TEST(Report, StableKeyOrder) {
    SelectionReport r;
    r.command = "fit";
    const std::string text = to_json(r).dump();
    const std::vector<std::string> keys{"schema_version", "command",  "n",          "p",
                                        "loss",           "bandwidth", "chosen_lambda", "chosen_v",
                                        "variables",      "scores",    "active_set", "stability_curve",
                                        "warnings"};
    std::size_t pos = 0;
    for (const auto& k : keys) {
        const auto at = text.find("\"" + k + "\"", pos);
        ASSERT_NE(at, std::string::npos) << k;
        pos = at;
    }
}

TEST(Report, MalformedJsonIsAnInputError) {
    EXPECT_THROW(report_from_json(ordered_json::parse("{}")), InvalidArgument);
    auto j = to_json(SelectionReport{});
    j["schema_version"] = 99;
    EXPECT_THROW(report_from_json(j), InvalidArgument);
}

TEST(Cli, KappaPrintsHandValue) {
    const auto r = invoke({"kappa", "--a", "1,2", "--b", "1,3", "--p", "10"});
    EXPECT_EQ(r.code, kExitOk);
    EXPECT_EQ(r.out, "0.375\n");
    const auto j = invoke({"kappa", "--a", "1,2", "--b", "1,2", "--p", "10", "--format", "json"});
    EXPECT_EQ(j.out, "{\"kappa\":1.0}\n");
    EXPECT_EQ(invoke({"kappa", "--a", "", "--b", "", "--p", "10"}).out, "0\n");
}

TEST(Cli, FitReportsScoresAndSelection) {
    TempDir dir;
    const auto path = example1_csv(dir, 60, 6, 1);
    const auto r = invoke({"fit", path, "--lambda", "0.01", "--v", "0.05"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const auto j = ordered_json::parse(r.out);
    EXPECT_EQ(j["command"], "fit");
    EXPECT_EQ(j["n"], 60);
    EXPECT_EQ(j["p"], 6);
    EXPECT_EQ(j["variables"][0], "x1");
    EXPECT_EQ(j["scores"]["raw"].size(), 6u);
    const SelectionReport rep = report_from_json(j);
    for (std::size_t l = 0; l < 6; ++l) {
        const bool in = std::find(rep.active_set.begin(), rep.active_set.end(), l + 1) != rep.active_set.end();
        EXPECT_EQ(in, rep.scores[l] > 0.05);
    }
    EXPECT_DOUBLE_EQ(*std::max_element(rep.normalized_scores.begin(), rep.normalized_scores.end()), 1.0);
}

TEST(Cli, SelectRecoversFirstDesignActiveSet) {
    TempDir dir;
    const auto path = example1_csv(dir, 200, 10, 2024);
    const auto out = dir.file("report.json");
    const auto r = invoke({"select", path, "--seed", "3", "--out", out});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_TRUE(r.out.empty());
    std::ifstream in(out);
    const SelectionReport rep = report_from_json(ordered_json::parse(in));
    EXPECT_EQ(rep.active_set, (std::vector<std::size_t>{1, 2, 3, 4, 5}));
    ASSERT_TRUE(rep.stability_curve.has_value());
    EXPECT_EQ(rep.stability_curve->lambda_grid.size(), 61u);
    EXPECT_EQ(rep.stability_curve->splits, 20u);
    EXPECT_EQ(rep.stability_curve->seed, 3u);
}

TEST(Cli, TuneOmitsSelectionAndCsvFormat) {
    TempDir dir;
    const auto path = example1_csv(dir, 60, 6, 5);
    const auto r = invoke({"tune", path, "--lambda-grid", "-3:-1:1", "--v-grid", "-2:1:0.5", "--splits", "4"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const SelectionReport rep = report_from_json(ordered_json::parse(r.out));
    EXPECT_EQ(rep.command, "tune");
    EXPECT_TRUE(rep.scores.empty());
    EXPECT_TRUE(rep.chosen_lambda.has_value());
    EXPECT_EQ(rep.stability_curve->lambda_grid.size(), 3u);
    EXPECT_EQ(rep.stability_curve->v_grid.size(), 7u);

    const auto c = invoke({"fit", path, "--lambda", "0.01", "--v", "0.1", "--format", "csv"});
    ASSERT_EQ(c.code, kExitOk);
    EXPECT_EQ(c.out.substr(0, c.out.find('\n')), "index,name,score,normalized_score,selected");
    EXPECT_EQ(std::count(c.out.begin(), c.out.end(), '\n'), 7);
}

TEST(Cli, SimulateRow) {
    const auto r = invoke({"simulate", "--n", "60", "--p", "6", "--reps", "2", "--splits", "3", "--lambda-grid",
                           "-3:-1:1", "--v-grid", "-2:1:0.5", "--format", "csv"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "n,p,eta,method,size,tp,fp,C,U,O,failed");
    EXPECT_NE(r.out.find("60,6,0.00,MF-SQ,"), std::string::npos) << r.out;
    const auto j = invoke({"simulate", "--example", "classification2", "--loss", "logistic", "--n", "60", "--p",
                           "4", "--reps", "1", "--splits", "3", "--lambda-grid", "-2:-1:1", "--v-grid", "-2:0:1"});
    ASSERT_EQ(j.code, kExitOk) << j.err;
    const auto parsed = ordered_json::parse(j.out);
    EXPECT_EQ(parsed["method"], "MF-LOG");
    EXPECT_EQ(parsed["replications"].size(), 1u);
}

TEST(Cli, ExitCodeMatrix) {
    TempDir dir;
    const auto good = example1_csv(dir, 30, 6, 9);
    const auto real = dir.write("real.csv", "1,2,0.5\n2,1,0.3\n3,3,1\n");
    const auto na = dir.write("na.csv", "a,b,y\n1,2,0.5\n2,NA,0.3\n");
    const auto same = dir.write("same.csv", "1,1,0\n1,1,1\n1,1,2\n1,1,3\n");
    struct Case {
        std::vector<std::string> args;
        int code;
    };
    const std::vector<Case> cases{
        {{}, kExitUsage},
        {{"bogus"}, kExitUsage},
        {{"--help"}, kExitOk},
        {{"fit", good}, kExitUsage},  // --lambda is required
        {{"fit", good, "--lambda", "0"}, kExitUsage},
        {{"fit", good, "--lambda", "abc"}, kExitUsage},
        {{"fit", good, "--lambda", "0.1", "--loss", "huber"}, kExitUsage},
        {{"fit", real, "--lambda", "0.1", "--loss", "hinge"}, kExitUsage},
        {{"fit", na, "--lambda", "0.1"}, kExitUsage},
        {{"fit", dir.file("missing.csv"), "--lambda", "0.1"}, kExitUsage},
        {{"fit", good, "--lambda", "0.1", "--response", "nope"}, kExitUsage},
        {{"fit", good, "--lambda", "0.1", "--loss", "check", "--tau", "1.5"}, kExitUsage},
        {{"fit", good, "--lambda", "0.1", "--format", "xml"}, kExitUsage},
        {{"fit", good, "--lambda", "0.1", "--sigma", "-1"}, kExitUsage},
        {{"fit", good, "--lambda", "0.1", "--out", dir.file("no/such/dir/r.json")}, kExitUsage},
        {{"fit", same, "--lambda", "0.1"}, kExitNumerical},
        {{"select", good, "--lambda", "0.1", "--lambda-grid", "-1:0:1"}, kExitUsage},
        {{"select", good, "--v-grid", "1:0:1"}, kExitUsage},
        {{"select", good, "--lambda-grid", "a:b"}, kExitUsage},
        {{"select", good, "--splits", "0"}, kExitUsage},
        {{"select", good, "--stability-q", "0"}, kExitUsage},
        {{"select", good, "--lambda", "0.1", "--v", "1e6", "--splits", "2"}, kExitNumerical},
        {{"tune", same, "--lambda", "0.1", "--v", "0.1", "--splits", "2"}, kExitNumerical},
        {{"simulate", "--p", "3"}, kExitUsage},
        {{"simulate", "--example", "three"}, kExitUsage},
        {{"kappa", "--a", "1,2", "--b", "1,11", "--p", "10"}, kExitUsage},
        {{"kappa", "--a", "1,x", "--b", "1", "--p", "10"}, kExitUsage},
        {{"kappa", "--a", "0", "--b", "1", "--p", "10"}, kExitUsage},
        {{"kappa", "--a", "1", "--b", "1", "--p", "0"}, kExitUsage},
        {{"kappa", "--a", "1", "--b", "1"}, kExitUsage},
        {{"fit", good, "--lambda", "0.1"}, kExitOk},
    };
    for (const auto& c : cases) {
        std::string joined;
        for (const auto& a : c.args) joined += a + " ";
        const auto r = invoke(c.args);
        EXPECT_EQ(r.code, c.code) << joined << "\n" << r.err;
        if (c.code != kExitOk) {
            EXPECT_FALSE(r.err.empty()) << joined;
        }
    }
}

TEST(Cli, SelectReportsAreByteIdenticalAcrossThreadCaps) {
    TempDir dir;
    const auto path = example1_csv(dir, 60, 6, 13);
    const std::vector<std::string> args{"select",       path, "--lambda-grid", "-3:-1:0.5", "--v-grid",
                                        "-2:1:0.25",    "--splits", "6", "--seed", "21"};
    std::string base;
    for (const char* cap : {"1", "2", "4", "1"}) {
        setenv("RKHS_SPARSE_THREADS", cap, 1);
        const auto r = invoke(args);
        ASSERT_EQ(r.code, kExitOk) << r.err;
        if (base.empty()) base = r.out;
        EXPECT_EQ(r.out, base) << "cap " << cap;
    }
    unsetenv("RKHS_SPARSE_THREADS");
}
