#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "mpst/cli.hpp"
#include "support.hpp"

using namespace mpst;
using namespace mpst::testing;

namespace {

struct CliRun {
    int code = 0;
    std::string out;
    std::string err;
};

CliRun cli(std::vector<std::string> args, const std::string& input = "") {
    args.insert(args.begin(), "mpstseq");
    std::istringstream in(input);
    std::ostringstream out, err;
    int code = run_cli(args, in, out, err);
    return {code, out.str(), err.str()};
}

std::string fx(const std::string& name) { return fixture_path(name); }

} // namespace

TEST(Cli, ProjectText) {
    CliRun r = cli({"project", fx("auction.gt"), "--role", "3"});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    EXPECT_TRUE(alpha_equal(local(r.out),
                            local("?[1]l(Int). rec t. ![1]{ bid(Int). ?[1]{ l(Int). t ; s(Int). end } ; no(). end }")));
}

TEST(Cli, ProjectJson) {
    CliRun r = cli({"--json", "project", fx("prob_run.gt"), "-r", "1"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["role"], 1);
    EXPECT_EQ(local(j["local"].get<std::string>()), local("![2]l(Int). end"));
}

TEST(Cli, ProjectUndefined) {
    CliRun r = cli({"project", "-", "-r", "3"}, "1->2:{a(). 2->3:x(). end ; b(). 3->2:y(). end}");
    EXPECT_EQ(r.code, kExitFailure);
    EXPECT_NE(r.err.find("MergeUndefined"), std::string::npos);
}

TEST(Cli, Check) {
    CliRun ok = cli({"check", fx("auction.proc"), "-t", "s=" + fx("auction.gt")});
    EXPECT_EQ(ok.code, kExitOk) << ok.err;
    EXPECT_NE(ok.out.find("well-typed"), std::string::npos);
    CliRun bad = cli({"check", fx("prob_run.proc"), "-t", "s=" + fx("auction.gt")});
    EXPECT_EQ(bad.code, kExitFailure);
    EXPECT_NE(bad.out.find("not well-typed"), std::string::npos);
}

TEST(Cli, Seq) {
    CliRun r = cli({"seq", fx("prob_run.proc"), "-t", "s=" + fx("prob_run.gt")});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    SgpSystem sys = value_or_throw(parse_sgp_system(r.out));
    EXPECT_EQ(sys.program, sgp("tau. x@s[2] := 5. x@s[4] := 4. 0"));
}

TEST(Cli, SeqJson) {
    CliRun r = cli({"--json", "seq", fx("auction.proc"), "-t", "s=" + fx("auction.gt")});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    auto j = nlohmann::json::parse(r.out);
    EXPECT_TRUE(j.contains("sgp"));
    EXPECT_GT(j["size"].get<int>(), 0);
}

TEST(Cli, EmitMatchesGolden) {
    CliRun r = cli({"emit", fx("auction.proc"), "-t", "s=" + fx("auction.gt"), "-c", fx("auction.cfg")});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(r.out, read_file(std::string(MPST_GOLDEN) + "/auction.pml"));
}

TEST(Cli, SimulateSgp) {
    CliRun r = cli({"simulate", fx("swap.sgp")});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("terminated"), std::string::npos);
}

TEST(Cli, SimulateJson) {
    CliRun r = cli({"--json", "simulate", fx("prob_run.proc")});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["stop"], "terminated");
    ASSERT_EQ(j["steps"].size(), 4u);
    EXPECT_EQ(j["steps"][0]["rule"], "");
    EXPECT_EQ(j["steps"][1]["rule"], "Link");
}

TEST(Cli, SimulateStepLimit) {
    CliRun r = cli({"--json", "simulate", "-", "--max-steps", "5"}, "rec X. tau. X");
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(nlohmann::json::parse(r.out)["stop"], "step limit");
}

TEST(Cli, Correspond) {
    CliRun r = cli({"correspond", fx("prob_run.proc"), "-t", "s=" + fx("prob_run.gt")});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("strict"), std::string::npos);
}

TEST(Cli, McViolation) {
    CliRun r = cli({"mc", fx("auction.proc"), "-t", "s=" + fx("auction.gt"), "-c", fx("auction.cfg"), "-l", "P3", "-p",
                 "incB1=1", "-p", "incB2=1"});
    EXPECT_EQ(r.code, kExitFailure) << r.err;
    EXPECT_NE(r.out.find("P3"), std::string::npos);
}

TEST(Cli, McHolds) {
    CliRun r = cli({"--json", "mc", fx("auction.proc"), "-t", "s=" + fx("auction.gt"), "-c", fx("auction.cfg"), "-l",
                 "P4", "-p", "incB1=2", "-p", "incB2=3"});
    EXPECT_EQ(r.code, kExitOk) << r.err;
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(cli({}).code, kExitUsage);
    EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
    EXPECT_EQ(cli({"project", fx("auction.gt")}).code, kExitUsage);
    CliRun parse = cli({"--json", "project", "-", "-r", "1"}, "1->2 a(). end");
    EXPECT_EQ(parse.code, kExitUsage);
    EXPECT_TRUE(nlohmann::json::parse(parse.out).contains("error"));
}

TEST(Cli, Binary) {
    std::string cmd = std::string(MPST_CLI) + " project " + fx("prob_run.gt") + " -r 2 > /dev/null";
    EXPECT_EQ(std::system(cmd.c_str()), 0);
}
