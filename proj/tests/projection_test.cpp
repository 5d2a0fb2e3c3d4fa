#include <gtest/gtest.h>

#include <chrono>

#include "mpst/projection.hpp"
#include "support.hpp"

using namespace mpst;
using namespace mpst::testing;

namespace {

const char* kLocalA =
    "?[2]bid(Int). ![3]l(Int). rec t. ?[3]{ bid(Int). ![2]l(Int). ?[2]{ bid(Int). ![3]l(Int). t ; "
    "no(). ![3]s(Int). end } ; no(). ![2]s(Int). end }";
const char* kLocalB1 = "![1]bid(Int). rec t. ?[1]{ l(Int). ![1]{ bid(Int). t ; no(). end } ; s(Int). end }";
const char* kLocalB2 = "?[1]l(Int). rec t. ![1]{ bid(Int). ?[1]{ l(Int). t ; s(Int). end } ; no(). end }";

} // namespace

TEST(Projection, AuctionGolden) {
    GlobalType g = fixture_type("auction");
    EXPECT_TRUE(alpha_equal(project(g, Role{1}), local(kLocalA))) << render(project(g, Role{1}));
    EXPECT_TRUE(alpha_equal(project(g, Role{2}), local(kLocalB1))) << render(project(g, Role{2}));
    EXPECT_TRUE(alpha_equal(project(g, Role{3}), local(kLocalB2))) << render(project(g, Role{3}));
}

TEST(Projection, AuctionIsFast) {
    GlobalType g = fixture_type("auction");
    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < 100; ++i)
        for (std::uint32_t r = 1; r <= 3; ++r) project(g, Role{r});
    EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(1));
}

TEST(Projection, UninvolvedRoleSkipsPrefix) {
    GlobalType g = global("1->2:a(Int). 3->2:b(). end");
    EXPECT_EQ(project(g, Role{3}), local("![2]b(). end"));
    EXPECT_EQ(project(g, Role{1}), local("![2]a(Int). end"));
    EXPECT_EQ(project(g, Role{2}), local("?[1]a(Int). ?[3]b(). end"));
}

TEST(Projection, MergeOfReceives) {
    LocalType a = local("?[1]{ x(). end }");
    LocalType b = local("?[1]{ y(Int). end }");
    EXPECT_EQ(merge(a, b), local("?[1]{ x(). end ; y(Int). end }"));
    EXPECT_EQ(merge(a, a), a);
}

TEST(Projection, MergeUndefined) {
    EXPECT_FALSE(try_merge(local("![1]x(). end"), local("![1]y(). end")).has_value());
    EXPECT_FALSE(try_merge(local("?[1]x(). end"), local("?[1]x(Int). end")).has_value());
    EXPECT_FALSE(try_merge(local("?[1]x(). end"), local("?[2]x(). end")).has_value());
    try {
        merge(local("![1]x(). end"), local("end"));
        FAIL();
    } catch (const ProjectionError& e) {
        EXPECT_EQ(e.code(), "MergeUndefined");
    }
}

TEST(Projection, UnprojectableChoice) {
    GlobalType g = global("1->2:{a(). 2->3:x(). end ; b(). 3->2:y(). end}");
    std::string why;
    EXPECT_FALSE(try_project(g, Role{3}, &why).has_value());
    EXPECT_FALSE(why.empty());
    EXPECT_THROW(project(g, Role{3}), ProjectionError);
    Projectability p = projectable(g);
    EXPECT_FALSE(p.ok);
    EXPECT_FALSE(p.diagnostics.empty());
    EXPECT_TRUE(p.projections.count(Role{1}));
}

TEST(Projection, RecursionAbsentRoleIsEnd) {
    GlobalType g = global("rec t. 1->2:a(). t");
    EXPECT_EQ(project(g, Role{3}), end_local());
    EXPECT_TRUE(alpha_equal(project(g, Role{1}), local("rec t. ![2]a(). t")));
}

TEST(Projection, ParallelComposition) {
    GlobalType g = fixture_type("prob_run");
    EXPECT_EQ(project(g, Role{1}), local("![2]l(Int). end"));
    EXPECT_EQ(project(g, Role{4}), local("?[3]l(Int). end"));
}

TEST(Projection, RevisedAuctionProjects) {
    Projectability p = projectable(fixture_type("revised_auction"));
    EXPECT_TRUE(p.ok);
    EXPECT_EQ(p.projections.size(), 3u);
    for (const auto& [r, l] : p.projections) EXPECT_TRUE(free_type_vars(l).empty()) << r.id;
}

TEST(Projection, ProjectionsAreClosed) {
    for (const char* stem : {"auction", "prob_run", "cond_copy"}) {
        GlobalType g = fixture_type(stem);
        for (Role r : roles(g)) EXPECT_TRUE(free_type_vars(project(g, r)).empty()) << stem << " " << r.id;
    }
}
