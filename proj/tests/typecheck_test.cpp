#include <gtest/gtest.h>

#include "mpst/projection.hpp"
#include "mpst/typecheck.hpp"
#include "mutations.hpp"
#include "support.hpp"

using namespace mpst;
using namespace mpst::testing;

TEST(Typecheck, FixturesAreWellTyped) {
    for (const char* stem : {"auction", "revised_auction", "prob_run", "cond_copy"}) {
        TypingReport r = well_typed(fixture_process(stem), fixture_sessions(stem));
        EXPECT_TRUE(r.verdict) << stem << (r.failures.empty() ? "" : " " + to_string(r.failures[0]));
        EXPECT_TRUE(r.failures.empty()) << stem;
        EXPECT_FALSE(r.trace.empty()) << stem;
    }
}

TEST(Typecheck, WrongTypeIsRejected) {
    TypingReport r = well_typed(fixture_process("prob_run"), fixture_sessions("auction"));
    EXPECT_FALSE(r.verdict);
    EXPECT_FALSE(r.failures.empty());
}

class AuctionMutation : public ::testing::TestWithParam<std::size_t> {};

TEST_P(AuctionMutation, IsRejectedByTheExpectedRule) {
    const Mutation& m = auction_mutations()[GetParam()];
    std::string text = apply_mutation(m, fixture_text("auction.proc"));
    ASSERT_FALSE(text.empty()) << m.name;
    Process p = value_or_throw(parse_process(text, declared_params(text)));
    TypingReport r = well_typed(p, fixture_sessions("auction"));
    EXPECT_FALSE(r.verdict) << m.name;
    ASSERT_FALSE(r.failures.empty()) << m.name;
    EXPECT_EQ(r.failures[0].code, m.rule) << m.name << ": " << to_string(r.failures[0]);
    EXPECT_FALSE(r.failures[0].message.empty());
}

INSTANTIATE_TEST_SUITE_P(Mutations, AuctionMutation, ::testing::Range<std::size_t>(0, 10));

TEST(Typecheck, MutationsCoverEveryKind) {
    std::set<std::string> kinds;
    for (const auto& m : auction_mutations()) kinds.insert(m.kind);
    EXPECT_EQ(kinds, (std::set<std::string>{"label swap", "role swap", "sort change", "dropped branch",
                                            "duplicated actor"}));
}

TEST(Typecheck, EnvStepCommunicates) {
    SessionEnv d;
    d.set({"s", Role{1}}, local("![2]a(Int). end"));
    d.set({"s", Role{2}}, local("?[1]a(Int). end"));
    auto next = env_step(d);
    ASSERT_EQ(next.size(), 1u);
    EXPECT_TRUE(next[0].empty());
}

TEST(Typecheck, EnvStepNeedsMatchingLabels) {
    SessionEnv d;
    d.set({"s", Role{1}}, local("![2]a(Int). end"));
    d.set({"s", Role{2}}, local("?[1]b(Int). end"));
    EXPECT_TRUE(env_step(d).empty());
}

TEST(Typecheck, EndEntriesAreDropped) {
    SessionEnv d;
    d.set({"s", Role{1}}, end_local());
    EXPECT_TRUE(d.empty());
    d.set({"s", Role{1}}, local("![2]a(). end"));
    EXPECT_FALSE(d.empty());
}

TEST(Typecheck, EquivalenceUnfolds) {
    EXPECT_TRUE(equivalent(local("rec t. ![2]a(). t"), local("![2]a(). rec t. ![2]a(). t")));
    EXPECT_FALSE(equivalent(local("rec t. ![2]a(). t"), local("![2]a(). end")));
}

TEST(Typecheck, RoleDistribution) {
    EXPECT_TRUE(role_distributed(fixture_process("auction")));
    EXPECT_FALSE(role_distributed(process("s[1->2]!a<>. 0 | s[1->2]!b<>. 0")));
}

TEST(Typecheck, DependencyGraph) {
    Process p = process("s[1->2]!x<>. t[1->2]!y<>. 0 | s[2<-1]?x(). 0 | t[2<-1]?y(). 0");
    DepGraph g = dependency_graph(p, {"s", "t"});
    EXPECT_TRUE(g.acyclic());
    EXPECT_EQ(g.order(), (std::vector<std::string>{"s", "t"}));
    Process q = process("s[1->2]!x<>. t[1->2]!y<>. 0 | t[2<-1]?y(). s[2<-1]?x(). 0");
    EXPECT_FALSE(dependency_graph(q, {"s", "t"}).acyclic());
}

TEST(Typecheck, InferSorts) {
    auto sorts = infer_sorts(process("if b then s[1->2]!a<x + 1>. 0 else 0"));
    EXPECT_EQ(sorts.at("b"), Sort::Bool);
    EXPECT_EQ(sorts.at("x"), Sort::Int);
}

TEST(Typecheck, SortOfExpressions) {
    std::map<std::string, Sort> env{{"x", Sort::Int}, {"b", Sort::Bool}};
    EXPECT_EQ(sort_of(value_or_throw(parse_expr("x + 1 < 3")), env), Sort::Bool);
    EXPECT_EQ(sort_of(value_or_throw(parse_expr("x * 2")), env), Sort::Int);
    std::string why;
    EXPECT_FALSE(sort_of(value_or_throw(parse_expr("b + 1")), env, &why).has_value());
    EXPECT_FALSE(why.empty());
}

TEST(Typecheck, Coherence) {
    SessionEnv d;
    for (Role r : roles(fixture_type("auction"))) d.set({"s", r}, project(fixture_type("auction"), r));
    EXPECT_TRUE(coherent(d, fixture_sessions("auction")));
    d.locals.erase(Actor{"s", Role{2}});
    EXPECT_FALSE(coherent(d, fixture_sessions("auction")));
}

TEST(Typecheck, JsonReport) {
    std::string j = to_json(well_typed(fixture_process("prob_run"), fixture_sessions("prob_run")));
    EXPECT_NE(j.find("\"verdict\""), std::string::npos);
    EXPECT_NE(j.find("true"), std::string::npos);
}
