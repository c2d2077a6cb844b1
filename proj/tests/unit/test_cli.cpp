#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <sys/wait.h>

#include "shadowspec_cli/cli.hpp"

namespace shadowspec::cli {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("shadowspec_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        write("diag.json", R"({"kind":"dense","dim":2,"entries":[[2,0],[0,0],[0,0],[0.5,0]]})");
        write("identity.json", R"({"kind":"dense","dim":2,"entries":[[1,0],[0,0],[0,0],[1,0]]})");
        write("singular.json", R"({"kind":"dense","dim":2,"entries":[[1,0],[0,0],[0,0],[0,0]]})");
        const double w = 2.0 * std::sqrt(2.0);
        std::ostringstream t;
        t << std::setprecision(17) << R"({"kind":"shift","direction":"forward","weight_pos":)" << w
          << R"(,"weight_neg":)" << 1.0 / w << R"(,"crossover":0})";
        write("t.json", t.str());
        write("bad.json", "{\"kind\":");
    }
    void TearDown() override { fs::remove_all(dir_); }

    void write(const std::string& name, const std::string& text) { std::ofstream(dir_ / name) << text; }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    int run(std::vector<std::string> args) {
        args.insert(args.begin(), "shadowspec");
        out_.str("");
        err_.str("");
        return main_entry(args, out_, err_);
    }
    static Json read_json(const std::string& p) {
        std::ifstream in(p);
        return Json::parse(in);
    }
    static std::string read_text(const std::string& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    fs::path dir_;
    std::ostringstream out_, err_;
};

TEST_F(Cli, AnalyzeForwardShift) {
    ASSERT_EQ(run({"analyze", "-i", path("t.json"), "-o", path("t_report.json")}), kOk) << err_.str();
    const Json j = read_json(path("t_report.json"));
    EXPECT_FALSE(j["report"]["verdicts"]["hyperbolic"].get<bool>());
    EXPECT_TRUE(j["report"]["verdicts"]["uniformly_expansive"].get<bool>());
    EXPECT_FALSE(j["report"]["verdicts"]["shadowing"].get<bool>());
    EXPECT_EQ(j["config"]["command"], "analyze");
}

TEST_F(Cli, AnalyzeIdentityAllFalse) {
    ASSERT_EQ(run({"analyze", "-i", path("identity.json"), "-o", path("id.json"), "--quiet"}), kOk);
    const Json v = read_json(path("id.json"))["report"]["verdicts"];
    EXPECT_FALSE(v["hyperbolic"].get<bool>());
    EXPECT_FALSE(v["uniformly_expansive"].get<bool>());
    EXPECT_FALSE(v["shadowing"].get<bool>());
    EXPECT_TRUE(out_.str().empty());
}

TEST_F(Cli, AnalyzeHyperbolicHasLaurentTable) {
    ASSERT_EQ(run({"analyze", "-i", path("diag.json"), "-o", path("d.json"), "--quiet"}), kOk);
    const Json j = read_json(path("d.json"));
    EXPECT_TRUE(j["report"]["verdicts"]["shadowing"].get<bool>());
    EXPECT_TRUE(j.contains("laurent"));
    EXPECT_TRUE(j["laurent_relations"]["pass"].get<bool>());
}

TEST_F(Cli, AnalyzeIsDeterministic) {
    ASSERT_EQ(run({"analyze", "-i", path("diag.json"), "-o", path("a.json"), "--seed", "7"}), kOk);
    ASSERT_EQ(run({"analyze", "-i", path("diag.json"), "-o", path("b.json"), "--seed", "7"}), kOk);
    Json a = read_json(path("a.json"));
    Json b = read_json(path("b.json"));
    a["config"].erase("output");
    b["config"].erase("output");
    EXPECT_EQ(a.dump(), b.dump());
}

TEST_F(Cli, ShadowWithinBoundAndOracleDominates) {
    ASSERT_EQ(run({"shadow", "-i", path("diag.json"), "-o", path("s.json"), "--delta", "1e-3"}), kOk)
        << err_.str();
    const Json j = read_json(path("s.json"));
    EXPECT_TRUE(j["checks"]["within_bound"].get<bool>());
    EXPECT_TRUE(j["checks"]["oracle_dominates"].get<bool>());
    EXPECT_LE(j["constructive"]["epsilon_achieved"].get<double>(),
              j["constructive"]["epsilon_bound"].get<double>());
}

TEST_F(Cli, ShadowZeroDelta) {
    ASSERT_EQ(run({"shadow", "-i", path("diag.json"), "-o", path("z.json"), "--delta", "0"}), kOk);
    const Json j = read_json(path("z.json"));
    EXPECT_EQ(j["constructive"]["epsilon_achieved"].get<double>(), 0.0);
    EXPECT_LT(j["oracle"]["epsilon_achieved"].get<double>(), 1e-12);
}

TEST_F(Cli, ShadowIdentityIsCertificateFailure) {
    EXPECT_EQ(run({"shadow", "-i", path("identity.json"), "-o", path("f.json")}), kCertificateFailure);
    EXPECT_NE(err_.str().find("r_plus"), std::string::npos);
    EXPECT_TRUE(read_json(path("f.json")).contains("certificate_failure"));
}

TEST_F(Cli, InputErrors) {
    EXPECT_EQ(run({"analyze", "-i", path("missing.json")}), kInputError);
    EXPECT_EQ(run({"analyze", "-i", path("bad.json")}), kInputError);
    EXPECT_EQ(run({"analyze", "-i", path("diag.json"), "--tol", "-1"}), kInputError);
    EXPECT_EQ(run({"probe", "-i", path("diag.json"), "--q", "0.5"}), kInputError);
    EXPECT_EQ(run({"analyze", "-i", path("diag.json"), "-o", path("nodir/x.json")}), kInputError);
    EXPECT_EQ(run({"analyze", "-i", path("diag.json"), "--kind", "shift"}), kInputError);
    EXPECT_EQ(run({"analyze", "--bogus"}), kInputError);
    EXPECT_EQ(run({"shadow", "-i", path("t.json")}), kInputError);
}

TEST_F(Cli, SingularOperatorIsNumericalFailure) {
    EXPECT_EQ(run({"analyze", "-i", path("singular.json")}), kNumericalFailure);
}

TEST_F(Cli, ProbeWritesCsvAndConfig) {
    ASSERT_EQ(run({"probe", "-i", path("diag.json"), "-o", path("p.csv"), "--window", "8"}), kOk)
        << err_.str();
    const std::string csv = read_text(path("p.csv"));
    EXPECT_EQ(csv.rfind("N,gain\n", 0), 0u);
    EXPECT_NE(csv.find("\n8,"), std::string::npos);
    const Json side = read_json(path("p.json"));
    EXPECT_EQ(side["config"]["probe_kind"], "script-b");
}

TEST_F(Cli, ProbeShiftScriptS) {
    ASSERT_EQ(run({"probe", "-i", path("t.json"), "-o", path("ps.csv"), "--window", "4",
                   "--probe-kind", "script-s", "--quiet"}),
              kOk)
        << err_.str();
    EXPECT_NE(read_text(path("ps.csv")).find("\n4,"), std::string::npos);
}

TEST_F(Cli, Example17Bundle) {
    ASSERT_EQ(run({"example17", "-o", path("ex.json")}), kOk) << err_.str();
    const Json j = read_json(path("ex.json"));
    EXPECT_TRUE(j["verdict_table"]["matches_expected"].get<bool>());
    EXPECT_NEAR(j["T"]["spectra"]["annulus_inner"].get<double>(), 1.0 / (2.0 * std::sqrt(2.0)), 1e-12);
    EXPECT_NEAR(j["T"]["spectra"]["annulus_outer"].get<double>(), 2.0 * std::sqrt(2.0), 1e-12);
    EXPECT_TRUE(fs::exists(path("ex_gain.csv")));
    EXPECT_TRUE(fs::exists(path("ex_trend.csv")));
}

#ifdef SHADOWSPEC_TOOL_PATH
TEST_F(Cli, ProcessExitCodes) {
    const auto status = [&](const std::string& args) {
        const std::string cmd = std::string(SHADOWSPEC_TOOL_PATH) + " " + args + " >/dev/null 2>&1";
        const int raw = std::system(cmd.c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    EXPECT_EQ(status("analyze -i " + path("diag.json") + " --quiet"), 0);
    EXPECT_EQ(status("analyze -i " + path("bad.json")), 2);
    EXPECT_EQ(status("analyze -i " + path("singular.json")), 3);
    EXPECT_EQ(status("shadow -i " + path("identity.json")), 4);
}
#endif

}  // namespace
}  // namespace shadowspec::cli
