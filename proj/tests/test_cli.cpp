#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int status = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("seqab_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

Run run(const std::string& args, const fs::path& dir) {
    const fs::path o = dir / "stdout.txt", e = dir / "stderr.txt";
    const std::string cmd = std::string(SEQAB_CLI) + " " + args + " >" + o.string() + " 2>" + e.string();
    const int raw = std::system(cmd.c_str());
    Run r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(o);
    r.err = slurp(e);
    return r;
}

}  // namespace

TEST(Cli, DesignPrintsSampleSizes) {
    const auto dir = scratch("design");
    const auto r = run("design --p0 0.1 --mde 0.01 --alpha 0.05 --power 0.8 --rho2 1e-3", dir);
    ASSERT_EQ(r.status, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["n_star"], 163183);
    EXPECT_EQ(j["fht_n"], 29498);
    const auto fh = run("design --p0 0.1 --mde 0.01 --fixed-horizon", dir);
    EXPECT_EQ(nlohmann::json::parse(fh.out)["fht_n_per_arm"], 14749);
}

TEST(Cli, InvalidMethodWritesNothing) {
    const auto dir = scratch("badmethod");
    {
        std::ofstream log(dir / "log.jsonl");
        log << "{\"arm\": 0, \"value\": 1}\n{\"arm\": 1, \"value\": 0}\n";
    }
    const auto r = run("analyze --log " + (dir / "log.jsonl").string() + " --method bogus --out " +
                           (dir / "out").string(),
                       dir);
    EXPECT_NE(r.status, 0);
    EXPECT_FALSE(fs::exists(dir / "out"));
    EXPECT_NE(r.err.find("bogus"), std::string::npos);
}

TEST(Cli, UnknownFlagPrintsUsage) {
    const auto dir = scratch("badflag");
    const auto r = run("design --p0 0.1 --mde 0.01 --frobnicate", dir);
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
    const auto sub = run("launch", dir);
    EXPECT_NE(sub.status, 0);
}

TEST(Cli, MalformedLogExitsWithLineNumber) {
    const auto dir = scratch("badlog");
    {
        std::ofstream log(dir / "log.jsonl");
        log << "{\"arm\": 0, \"value\": 1}\n{\"arm\": 5, \"value\": 0}\n";
    }
    const auto r = run("analyze --log " + (dir / "log.jsonl").string() + " --method asympcs --out " +
                           (dir / "out").string(),
                       dir);
    EXPECT_EQ(r.status, 3);
    EXPECT_NE(r.err.find("line 2"), std::string::npos);
}

TEST(Cli, AnalyzeWritesTrajectoryAndDecision) {
    const auto dir = scratch("analyze");
    {
        std::ofstream log(dir / "exp-7.jsonl");
        for (int i = 0; i < 4000; ++i) {
            log << "{\"ts\": " << i << ", \"unit\": \"u" << i << "\", \"arm\": " << i % 2
                << ", \"value\": " << ((i % 2 == 1 && i % 3 == 0) ? 1 : 0) << "}\n";
        }
    }
    const auto r = run("analyze --log " + (dir / "exp-7.jsonl").string() + " --method asympcs --out " +
                           (dir / "out").string(),
                       dir);
    ASSERT_EQ(r.status, 0) << r.err;
    const auto d = nlohmann::json::parse(slurp(dir / "out" / "decision.json"));
    EXPECT_EQ(d["experiment"], "exp-7");
    EXPECT_EQ(d["verdict"], "significant");
    EXPECT_EQ(slurp(dir / "out" / "trajectory.csv").rfind("n,n0,n1,center,lower,upper,verdict\n", 0), 0u);
}

TEST(Cli, SimulateTypeOneWithBundledConfig) {
    const auto dir = scratch("simulate");
    const auto r = run(std::string("simulate --study type1 --config ") + SEQAB_CONFIG_DIR + "/type1.json --out " +
                           (dir / "out").string(),
                       dir);
    ASSERT_EQ(r.status, 0) << r.err;
    std::ifstream csv(dir / "out" / "report.csv");
    std::string line, last;
    while (std::getline(csv, line)) {
        if (line.rfind("type1,AsympCS,", 0) == 0) last = line;
    }
    ASSERT_FALSE(last.empty());
    EXPECT_LE(std::stod(last.substr(last.rfind(',') + 1)), 0.065);
    EXPECT_TRUE(nlohmann::json::parse(slurp(dir / "out" / "report.json")).contains("methods"));
}

TEST(Cli, ReportCrosstabFromCounts) {
    const auto dir = scratch("crosstab");
    const auto r = run("report crosstab --counts 593,308,3,1185", dir);
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_NE(r.out.find("28% (593)"), std::string::npos);
    EXPECT_NE(r.out.find("0.1% (3)"), std::string::npos);
    EXPECT_NE(r.out.find("2089"), std::string::npos);
    const auto j = run("report crosstab --counts 593,308,3,1185 --out " + (dir / "t.json").string(), dir);
    ASSERT_EQ(j.status, 0);
    EXPECT_EQ(nlohmann::json::parse(slurp(dir / "t.json"))["total"]["total"], 2089);
}

TEST(Cli, CorpusRoundTripThroughCrosstab) {
    const auto dir = scratch("corpus");
    ASSERT_EQ(run("corpus --out " + (dir / "c").string(), dir).status, 0);
    ASSERT_TRUE(fs::exists(dir / "c" / "truth.json"));
    for (const char* method : {"fht-peeking", "asympcs"}) {
        for (const auto& e : fs::directory_iterator(dir / "c" / "logs")) {
            const auto out = dir / "d" / method / e.path().stem();
            const auto r = run("analyze --log " + e.path().string() + " --method " + method + " --out " + out.string(),
                               dir);
            ASSERT_EQ(r.status, 0) << r.err;
        }
    }
    const auto r = run("report crosstab --decisions " + (dir / "d").string() + " --out " + (dir / "t.json").string(),
                       dir);
    ASSERT_EQ(r.status, 0) << r.err;
    const auto j = nlohmann::json::parse(slurp(dir / "t.json"));
    EXPECT_EQ(j["fht_significant"]["asympcs_significant"]["count"], 28);
    EXPECT_EQ(j["fht_significant"]["asympcs_not_significant"]["count"], 15);
    EXPECT_EQ(j["fht_not_significant"]["asympcs_significant"]["count"], 0);
    EXPECT_EQ(j["fht_not_significant"]["asympcs_not_significant"]["count"], 57);
}
