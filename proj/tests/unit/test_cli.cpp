#include <gtest/gtest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "storesim/data.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "storesim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = storesim::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
protected:
    fs::path dir;
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("storesim_cli_" + std::string(
                                     ::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::string slurp(const std::string& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> data_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#') lines.push_back(line);
    return lines;
}

}  // namespace

TEST_F(Cli, HelpAndVersionExitZero) {
    EXPECT_EQ(invoke({"--help"}).code, storesim::cli::kExitOk);
    EXPECT_EQ(invoke({"simulate", "--help"}).code, storesim::cli::kExitOk);
    Result v = invoke({"--version"});
    EXPECT_EQ(v.code, storesim::cli::kExitOk);
}

TEST_F(Cli, ConfigErrorsExitOne) {
    EXPECT_EQ(invoke({}).code, storesim::cli::kExitConfig);
    EXPECT_EQ(invoke({"simulate", "--no-such-flag"}).code, storesim::cli::kExitConfig);
    EXPECT_EQ(invoke({"simulate", "--gmax", "abc"}).code, storesim::cli::kExitConfig);
    EXPECT_EQ(invoke({"simulate", "--policy", "bogus", "--n", "100"}).code,
              storesim::cli::kExitConfig);
    EXPECT_EQ(invoke({"simulate", "--policy", "two-threshold", "--smax", "10", "--sc", "8",
                      "--sd", "2", "--n", "100"})
                  .code,
              storesim::cli::kExitConfig);
    EXPECT_EQ(invoke({"simulate", "--alpha", "0.5", "--eta-c", "0.9", "--eta-d", "0.9"}).code,
              storesim::cli::kExitConfig);
    EXPECT_EQ(invoke({"dp", "--smax", "0"}).code, storesim::cli::kExitConfig);
    Result r = invoke({"simulate", "--config", path("missing.json")});
    EXPECT_EQ(r.code, storesim::cli::kExitConfig);
    EXPECT_NE(r.err.find("config error"), std::string::npos);
}

TEST_F(Cli, RuntimeErrorsExitTwo) {
    std::ofstream(path("bad.csv")) << "timestamp,value_mw\n2024-01-01T00:00:00Z,x\n";
    Result r = invoke({"simulate", "--trace", path("bad.csv")});
    EXPECT_EQ(r.code, storesim::cli::kExitRuntime);
    EXPECT_NE(r.err.find("line 2"), std::string::npos);
}

TEST_F(Cli, StdoutJsonCarriesOnlyTheDocument) {
    Result r = invoke({"simulate", "--n", "20000", "--smax", "50", "--alpha", "0.6",
                       "--stdout-json"});
    ASSERT_EQ(r.code, 0) << r.err;
    json doc = json::parse(r.out);
    EXPECT_EQ(doc["tool"], "storesim");
    EXPECT_EQ(doc["command"], "simulate");
    EXPECT_EQ(doc["seed"], 1);
    EXPECT_EQ(doc["config"]["smax"], 50.0);
    EXPECT_FALSE(doc["config"].contains("out"));
    EXPECT_TRUE(doc["result"]["report"].contains("j_g"));
    EXPECT_TRUE(doc["result"].contains("j_g_closed_form"));
    EXPECT_EQ(doc["config_hash"].get<std::string>().rfind("fnv1a64:", 0), 0u);
}

TEST_F(Cli, HumanSummaryOnStdout) {
    Result r = invoke({"analyze", "--smax", "50", "--alpha", "0.6"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("j_g: "), std::string::npos);
    EXPECT_NE(r.out.find("rate_bounds.gamma_min: "), std::string::npos);
}

TEST_F(Cli, ConfigReplayIsBitExact) {
    Result a = invoke({"simulate", "--n", "30000", "--smax", "40", "--alpha", "0.7", "--seed",
                       "5", "--policy", "two-threshold", "--sc", "5", "--sd", "20", "--out",
                       path("a.json")});
    ASSERT_EQ(a.code, 0) << a.err;
    Result b = invoke({"simulate", "--config", path("a.json"), "--out", path("b.json")});
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));

    // Command-line values override the replayed config.
    Result c = invoke({"simulate", "--config", path("a.json"), "--seed", "6", "--stdout-json"});
    ASSERT_EQ(c.code, 0) << c.err;
    json doc = json::parse(c.out);
    EXPECT_EQ(doc["seed"], 6);
    EXPECT_EQ(doc["config"]["sd"], 20.0);
    EXPECT_NE(doc["config_hash"], json::parse(slurp(path("a.json")))["config_hash"]);

    EXPECT_EQ(invoke({"analyze", "--config", path("a.json")}).code, storesim::cli::kExitConfig);
}

TEST_F(Cli, UnboundedCapacitiesAcceptInfToken) {
    Result r = invoke({"analyze", "--gmax", "inf", "--smax", "inf", "--alpha", "0.8",
                       "--stdout-json"});
    ASSERT_EQ(r.code, 0) << r.err;
    json doc = json::parse(r.out);
    EXPECT_EQ(doc["config"]["gmax"], "inf");
    EXPECT_EQ(doc["config"]["smax"], "inf");
    double lap = 13.99;
    EXPECT_NEAR(doc["result"]["j_g"].get<double>(), 0.2 * lap / 2, 1e-9);
}

TEST_F(Cli, DpGenerationWeightGivesZeroThresholds) {
    Result r = invoke({"dp", "--smax", "60", "--alpha", "0.6", "--ns", "61", "--nd", "121",
                       "--stdout-json", "--policy-csv", path("pol.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    json res = json::parse(r.out)["result"];
    EXPECT_EQ(res["thresholds"]["s_c"], 0.0);
    EXPECT_EQ(res["thresholds"]["s_d"], 0.0);
    EXPECT_TRUE(res["is_two_threshold"].get<bool>());
    auto lines = data_lines(slurp(path("pol.csv")));
    EXPECT_EQ(lines.size(), 1u + 61 * 121);
    EXPECT_EQ(slurp(path("pol.csv")).rfind("# storesim ", 0), 0u);
}

TEST_F(Cli, SweepCsvIsMonotone) {
    Result r = invoke({"sweep", "--n", "50000", "--alpha", "0.6", "--values", "0:60:20",
                       "--csv", path("sweep.csv"), "--threads", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto lines = data_lines(slurp(path("sweep.csv")));
    ASSERT_EQ(lines.size(), 5u);
    EXPECT_EQ(lines[0].rfind("s_max,j_g,", 0), 0u);
    double prev = INFINITY;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto c1 = lines[i].find(',');
        auto c2 = lines[i].find(',', c1 + 1);
        double jg = std::stod(lines[i].substr(c1 + 1, c2 - c1 - 1));
        EXPECT_LE(jg, prev);
        prev = jg;
    }
}

TEST_F(Cli, FitRecoversScale) {
    using namespace storesim;
    emit_timeseries(path("series.csv"),
                    synthetic_ar({0.5}, 0.0, LaplaceModel(0.0, 3.0), 20000, 4));
    Result r = invoke({"fit", "--input", path("series.csv"), "--lags", "1", "--stdout-json",
                       "--residuals-csv", path("res.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    json res = json::parse(r.out)["result"];
    EXPECT_NEAR(res["predictor"]["coefficients"][0].get<double>(), 0.5, 0.03);
    EXPECT_NEAR(res["laplace"]["b"].get<double>(), 3.0, 0.15);
    EXPECT_EQ(data_lines(slurp(path("res.csv"))).size(), 1u + 19999);
}
