#include <gtest/gtest.h>

#include "mpst/ast.hpp"
#include "support.hpp"

using namespace mpst;
using namespace mpst::testing;

TEST(Ast, TermsShareNodesOnCopy) {
    Expr e = binary(BinOp::Add, int_lit(1), var_ref("x"));
    Expr f = e;
    EXPECT_EQ(e.identity(), f.identity());
    EXPECT_TRUE(e.is<Binary>());
    EXPECT_EQ(e.as<Binary>()->op, BinOp::Add);
    EXPECT_EQ(e.as<IntLit>(), nullptr);
}

TEST(Ast, StructuralEquality) {
    EXPECT_EQ(binary(BinOp::Lt, var_ref("x"), int_lit(3)), binary(BinOp::Lt, var_ref("x"), int_lit(3)));
    EXPECT_FALSE(binary(BinOp::Lt, var_ref("x"), int_lit(3)) == binary(BinOp::Le, var_ref("x"), int_lit(3)));
    EXPECT_EQ(global("1->2:a(Int). end"), global("1->2:a(Int).end"));
    EXPECT_FALSE(global("1->2:a(Int). end") == global("1->2:a(Bool). end"));
}

TEST(Ast, SgpEqualityIgnoresProvenanceAndRecNames) {
    AnnotatedVar x{"x", "s", Role{2}};
    Sgp a = SAssign{{x}, {int_lit(1)}, end_sgp(), Provenance{"s", Role{1}, Role{2}, "l"}};
    Sgp b = SAssign{{x}, {int_lit(1)}, end_sgp(), std::nullopt};
    EXPECT_EQ(a, b);
    EXPECT_EQ(sgp("rec X. tau. X"), sgp("rec Y. tau. Y"));
    EXPECT_FALSE(sgp("rec X. tau. X") == sgp("rec X. tau. tau. X"));
}

TEST(Ast, RolesAndSizes) {
    GlobalType g = fixture_type("auction");
    EXPECT_EQ(roles(g), (std::set<Role>{Role{1}, Role{2}, Role{3}}));
    EXPECT_EQ(size(end_global()), 1u);
    EXPECT_GT(size(g), size(global("2->1:bid(Int). end")));
    EXPECT_EQ(roles(fixture_process("prob_run")).size(), 4u);
}

TEST(Ast, FreeNamesAndActors) {
    Process p = fixture_process("prob_run");
    EXPECT_EQ(free_names(p), (std::set<std::string>{"a"}));
    EXPECT_EQ(actors(p).size(), 4u);
    EXPECT_EQ(sessions_used(p), (std::set<std::string>{"s"}));
    Process q = process("acc a[2](s). s[2<-1]?l(x). if x > y then 0 else 0");
    EXPECT_EQ(free_vars(q), (std::set<std::string>{"y"}));
}

TEST(Ast, ParamsAreSeparateFromVariables) {
    Process p = fixture_process("auction");
    EXPECT_EQ(params(p), (std::set<std::string>{"incB1", "incB2", "maxB1", "maxB2"}));
    EXPECT_TRUE(free_vars(p).empty());
}

TEST(Ast, SubstitutionStopsAtBinders) {
    Process p = process("s[2<-1]?l(x). s[2->3]!m<x + y>. 0");
    Process q = substitute(p, {{"x", int_lit(7)}, {"y", int_lit(1)}});
    EXPECT_EQ(q, process("s[2<-1]?l(x). s[2->3]!m<x + 1>. 0"));
}

TEST(Ast, SubstitutionRejectsCapture) {
    Process p = process("s[2<-1]?l(x). s[2->3]!m<y>. 0");
    EXPECT_THROW(substitute(p, {{"y", var_ref("x")}}), CaptureError);
}

TEST(Ast, UnfoldHead) {
    GlobalType g = global("rec t. 1->2:a(). t");
    GlobalType u = unfold_head(g);
    ASSERT_TRUE(u.is<GComm>());
    EXPECT_EQ(u.as<GComm>()->branches[0].cont, g);
    EXPECT_EQ(unfold_head(local("rec t. ![2]a(). t")), local("![2]a(). rec t. ![2]a(). t"));
}

TEST(Ast, AlphaEquality) {
    EXPECT_TRUE(alpha_equal(local("rec t. ![2]a(). t"), local("rec u. ![2]a(). u")));
    EXPECT_FALSE(alpha_equal(local("rec t. ![2]a(). t"), local("rec u. ?[2]a(). u")));
}

TEST(Ast, TerminatedGlobalTypes) {
    EXPECT_TRUE(is_terminated(end_global()));
    EXPECT_TRUE(is_terminated(GPar{end_global(), end_global()}));
    EXPECT_FALSE(is_terminated(global("1->2:a(). end")));
}

TEST(Ast, ValueHelpers) {
    EXPECT_EQ(sort_of(Value{std::int64_t{3}}), Sort::Int);
    EXPECT_EQ(sort_of(Value{true}), Sort::Bool);
    EXPECT_EQ(to_string(Value{std::int64_t{-4}}), "-4");
    EXPECT_EQ(to_string(Value{false}), "false");
    EXPECT_EQ(value_expr(Value{true}), bool_lit(true));
}

TEST(Ast, SubstituteAnnotatedVars) {
    AnnotatedVar x{"x", "s", Role{1}};
    Expr e = binary(BinOp::Add, avar_ref(x), param_ref("k"));
    EXPECT_EQ(substitute_avars(e, {{x, std::int64_t{4}}}), binary(BinOp::Add, int_lit(4), param_ref("k")));
}
