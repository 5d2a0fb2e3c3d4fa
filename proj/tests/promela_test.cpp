#include <gtest/gtest.h>

#include <regex>

#include "mpst/promela.hpp"
#include "mpst/sequentialize.hpp"
#include "promela_lite.hpp"
#include "support.hpp"

using namespace mpst;
using namespace mpst::testing;

namespace {

std::string golden(const std::string& name) { return read_file(std::string(MPST_GOLDEN) + "/" + name); }

std::string emit(const std::string& stem, const std::string& cfg) {
    SgpSystem sys = map_sgp_system(fixture_process(stem), fixture_sessions(stem));
    EmitConfig ec = cfg.empty() ? EmitConfig{} : emit_config(fixture_config(cfg));
    return emit_program(sys, ec).source;
}

std::string section(const PromelaText& t, const std::string& name) {
    const auto& s = t.sections.at(name);
    return t.source.substr(s.begin, s.end - s.begin);
}

} // namespace

TEST(Promela, FlatName) { EXPECT_EQ(flat_name(AnnotatedVar{"b", "s", Role{3}}), "b_s_3"); }

TEST(Promela, ProbRunGolden) { EXPECT_EQ(emit("prob_run", ""), golden("prob_run.pml")); }

TEST(Promela, AuctionGolden) { EXPECT_EQ(emit("auction", "auction.cfg"), golden("auction.pml")); }

TEST(Promela, RevisedAuctionGolden) {
    EXPECT_EQ(emit("revised_auction", "revised_auction.cfg"), golden("revised_auction.pml"));
}

TEST(Promela, Structure) {
    std::string src = emit("auction", "auction.cfg");
    EXPECT_TRUE(std::regex_search(src, std::regex(R"(\n    skip;\n)")));
    EXPECT_TRUE(std::regex_search(src, std::regex(R"(\nLX_\w+:\n)")));
    EXPECT_TRUE(std::regex_search(src, std::regex(R"(goto LX_\w+;)")));
    EXPECT_NE(src.find("goto LEnd;"), std::string::npos);
    EXPECT_NE(src.find("\nLEnd: skip;\n"), std::string::npos);
    EXPECT_NE(src.find("select(incB1 : 1 .. 10);"), std::string::npos);
}

TEST(Promela, GhostFollowsTrigger) {
    std::string src = emit("auction", "auction.cfg");
    EXPECT_NE(src.find("b_s_3 = b_s_1;\n            sold = 2;"), std::string::npos);
    EXPECT_NE(src.find("b_s_2 = b_s_1;\n        sold = 1;"), std::string::npos);
}

TEST(Promela, Sections) {
    SgpSystem sys = map_sgp_system(fixture_process("auction"), fixture_sessions("auction"));
    PromelaText t = emit_program(sys, emit_config(fixture_config("auction.cfg")));
    ASSERT_TRUE(t.sections.count("preamble"));
    ASSERT_TRUE(t.sections.count("ltl"));
    ASSERT_TRUE(t.sections.count("body"));
    EXPECT_NE(section(t, "preamble").find("int b_s_1 = 0;"), std::string::npos);
    EXPECT_EQ(section(t, "ltl").find("ltl P1 {"), 0u);
    EXPECT_NE(section(t, "body").find("active proctype Model()"), std::string::npos);
}

TEST(Promela, SimultaneousAssignmentUsesTemporaries) {
    SgpSystem sys = value_or_throw(parse_sgp_system(fixture_text("swap.sgp")));
    std::string src = emit_program(sys).source;
    EXPECT_NE(src.find("d_step {"), std::string::npos);
    EXPECT_NE(src.find("tmp_1 = y_s_1;"), std::string::npos);
    auto vars = run_straight_line(src);
    EXPECT_EQ(vars.at("x_s_1"), 2);
    EXPECT_EQ(vars.at("y_s_1"), 1);
}

TEST(Promela, FixedParameterValues) {
    SgpSystem sys{{}, sgp("x@s[1] := k. 0")};
    EmitConfig cfg;
    cfg.values["k"] = std::int64_t{4};
    std::string src = emit_program(sys, cfg).source;
    EXPECT_NE(src.find("int k = 4;"), std::string::npos);
    EXPECT_EQ(run_straight_line(src).at("x_s_1"), 4);
}

TEST(Promela, Rename) {
    SgpSystem sys{{}, sgp("x@s[1] := 1. 0")};
    EmitConfig cfg;
    cfg.rename[AnnotatedVar{"x", "s", Role{1}}] = "winner";
    std::string src = emit_program(sys, cfg).source;
    EXPECT_NE(src.find("winner = 1;"), std::string::npos);
    EXPECT_EQ(src.find("x_s_1"), std::string::npos);
}

TEST(Promela, ParallelUsesRun) {
    SgpSystem sys{{}, SPar{sgp("x@s[1] := 1. 0"), sgp("x@s[2] := 2. 0")}};
    std::string src = emit_program(sys).source;
    EXPECT_NE(src.find("run Model_"), std::string::npos);
    EXPECT_NE(src.find("proctype Model_"), std::string::npos);
}
