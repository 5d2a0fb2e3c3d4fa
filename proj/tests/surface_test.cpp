#include <gtest/gtest.h>

#include "mpst/surface.hpp"
#include "support.hpp"

using namespace mpst;
using namespace mpst::testing;

TEST(Surface, ExprPrecedence) {
    Expr e = value_or_throw(parse_expr("1 + 2 * 3 < 4 && !b"));
    ASSERT_TRUE(e.is<Binary>());
    EXPECT_EQ(e.as<Binary>()->op, BinOp::And);
    EXPECT_EQ(render(value_or_throw(parse_expr("(1 + 2) * 3"))), "(1 + 2) * 3");
}

TEST(Surface, ExprParamsAreDeclared) {
    Expr e = value_or_throw(parse_expr("k + x", {"k"}));
    ASSERT_TRUE(e.is<Binary>());
    EXPECT_TRUE(e.as<Binary>()->lhs.is<ParamRef>());
    EXPECT_TRUE(e.as<Binary>()->rhs.is<VarRef>());
}

TEST(Surface, GlobalTypeRoundTrip) {
    for (const char* stem : {"auction", "revised_auction", "prob_run", "cond_copy"}) {
        GlobalType g = fixture_type(stem);
        EXPECT_EQ(global(render(g)), g) << stem;
    }
}

TEST(Surface, ProcessRoundTrip) {
    for (const char* stem : {"auction", "revised_auction", "prob_run", "cond_copy"}) {
        Process p = fixture_process(stem);
        std::string text = render(p);
        EXPECT_EQ(value_or_throw(parse_process(text, params(p))), p) << stem;
    }
}

TEST(Surface, LocalTypeRoundTrip) {
    LocalType l = local("rec t. ?[1]{ l(Int). ![1]{ bid(Int). t ; no(). end } ; s(Int). end }");
    EXPECT_EQ(local(render(l)), l);
}

TEST(Surface, SgpRoundTripKeepsProvenance) {
    std::string text = "tau. <s[1->2]!l> x@s[2] := 5. 0";
    Sgp s = sgp(text);
    EXPECT_EQ(render(s, true), text);
    EXPECT_EQ(render(s), "tau. x@s[2] := 5. 0");
}

TEST(Surface, SgpSystemHeader) {
    SgpSystem sys = value_or_throw(parse_sgp_system(fixture_text("swap.sgp")));
    AnnotatedVar x{"x", "s", Role{1}}, y{"y", "s", Role{1}};
    EXPECT_EQ(std::get<std::int64_t>(sys.vars.at(x)), 1);
    EXPECT_EQ(std::get<std::int64_t>(sys.vars.at(y)), 2);
    ASSERT_TRUE(sys.program.is<SAssign>());
    EXPECT_EQ(sys.program.as<SAssign>()->targets.size(), 2u);
}

TEST(Surface, DeclaredParams) {
    EXPECT_EQ(declared_params(fixture_text("auction.proc")),
              (std::set<std::string>{"incB1", "incB2", "maxB1", "maxB2"}));
    EXPECT_TRUE(declared_params(fixture_text("prob_run.proc")).empty());
}

TEST(Surface, ParseErrorsCarrySpans) {
    auto r = parse_global_type("1->2:a(Int).\n  2->1 b(). end");
    ASSERT_FALSE(r.ok());
    ASSERT_FALSE(r.diagnostics.empty());
    EXPECT_EQ(r.diagnostics[0].span.line, 2u);
    EXPECT_GT(r.diagnostics[0].span.col, 0u);
    EXPECT_THROW(value_or_throw(parse_process("s[1->2]!l<1>")), ParseError);
}

TEST(Surface, RejectsDuplicateBinderInOneBranch) {
    EXPECT_FALSE(parse_process("s[2<-1]?l(x, x). 0").ok());
}

TEST(Surface, Formula) {
    Formula f = value_or_throw(parse_formula("<> [] (x > 0) -> p U q"));
    ASSERT_TRUE(f.is<FImplies>());
    EXPECT_TRUE(f.as<FImplies>()->lhs.is<FEventually>());
    EXPECT_TRUE(f.as<FImplies>()->rhs.is<FUntil>());
    EXPECT_EQ(render(value_or_throw(parse_formula(render(f)))), render(f));
}

TEST(Surface, Config) {
    Config c = fixture_config("auction.cfg");
    ASSERT_EQ(c.params.size(), 4u);
    EXPECT_EQ(c.params[0].name, "incB1");
    EXPECT_EQ(c.params[0].lo, 1);
    EXPECT_EQ(c.params[0].hi, 10);
    ASSERT_EQ(c.ghosts.size(), 1u);
    EXPECT_EQ(c.ghosts[0].name, "sold");
    ASSERT_EQ(c.ghosts[0].triggers.size(), 2u);
    EXPECT_EQ(c.ghosts[0].triggers[1].on, (Provenance{"s", Role{1}, Role{3}, "s"}));
    EXPECT_EQ(c.ltl.size(), 6u);
    ASSERT_NE(c.find_ltl("P3"), nullptr);
    EXPECT_EQ(c.find_ltl("P9"), nullptr);
}

TEST(Surface, ConfigInitLines) {
    Config c = value_or_throw(parse_config("init x@s[1] = 3\ninit k = true\n"));
    EXPECT_EQ(std::get<std::int64_t>(c.init_vars.at(AnnotatedVar{"x", "s", Role{1}})), 3);
    EXPECT_EQ(std::get<bool>(c.init_values.at("k")), true);
}

TEST(Surface, DiagnosticToString) {
    Diagnostic d{Severity::Error, Span{3, 7, 1}, "unexpected token", "Syntax"};
    std::string s = to_string(d);
    EXPECT_NE(s.find("3:7"), std::string::npos);
    EXPECT_NE(s.find("unexpected token"), std::string::npos);
}
