#include <gtest/gtest.h>

#include <functional>

#include "mpst/semantics.hpp"
#include "mpst/sequentialize.hpp"
#include "support.hpp"

using namespace mpst;
using namespace mpst::testing;

namespace {

const char* kProbRun = "tau. x@s[2] := 5. x@s[4] := 4. 0";

const char* kAuction =
    "tau. b@s[1] := incB1 + 0. b@s[3] := b@s[1]. rec X. "
    "if incB2 + b@s[3] <= maxB2 then b@s[1] := incB2 + b@s[3]. b@s[2] := b@s[1]. "
    "  if incB1 + b@s[2] <= maxB1 then b@s[1] := incB1 + b@s[2]. b@s[3] := b@s[1]. X "
    "  else tau. b@s[3] := b@s[1]. 0 "
    "else tau. b@s[2] := b@s[1]. 0";

const char* kCondCopy =
    "tau. if x@s[1] > 5 then x@s[2] := 42. (if x@s[3] > 5 then x@s[4] := 42. 0 else x@s[4] := 0. 0) "
    "else x@s[2] := 0. (if x@s[3] > 5 then x@s[4] := 42. 0 else x@s[4] := 0. 0)";

Sgp seq(const std::string& stem) { return map_sgp({fixture_process(stem)}, fixture_sessions(stem)); }

} // namespace

TEST(Sequentialize, ProbRunGolden) { EXPECT_EQ(seq("prob_run"), sgp(kProbRun)) << render(seq("prob_run")); }

TEST(Sequentialize, AuctionGolden) { EXPECT_EQ(seq("auction"), sgp(kAuction)) << render(seq("auction")); }

TEST(Sequentialize, CondCopyGolden) { EXPECT_EQ(seq("cond_copy"), sgp(kCondCopy)) << render(seq("cond_copy")); }

TEST(Sequentialize, ProvenanceNamesTheCommunication) {
    Sgp s = seq("prob_run");
    ASSERT_TRUE(s.is<SAssign>());
    const SAssign* link = s.as<SAssign>();
    EXPECT_TRUE(link->targets.empty());
    const SAssign* first = link->cont.as<SAssign>();
    ASSERT_NE(first, nullptr);
    ASSERT_TRUE(first->origin.has_value());
    EXPECT_EQ(*first->origin, (Provenance{"s", Role{1}, Role{2}, "l"}));
}

TEST(Sequentialize, CasesAndSorts) {
    SeqResult r = sequentialize({fixture_process("auction")}, fixture_sessions("auction"));
    EXPECT_GT(r.cases.size(), 0u);
    EXPECT_EQ(r.cases.count("9"), 1u);
    EXPECT_EQ(r.sorts.at(AnnotatedVar{"b", "s", Role{1}}), Sort::Int);
}

TEST(Sequentialize, RevisedAuctionMaps) {
    Sgp s = seq("revised_auction");
    EXPECT_TRUE(annotated_vars(s).count(AnnotatedVar{"c", "s", Role{1}}));
    EXPECT_TRUE(free_svars(s).empty());
}

TEST(Sequentialize, SystemStartsAtZero) {
    SgpSystem sys = map_sgp_system(fixture_process("cond_copy"), fixture_sessions("cond_copy"));
    EXPECT_EQ(sys.vars.size(), 4u);
    for (const auto& [v, val] : sys.vars) EXPECT_EQ(std::get<std::int64_t>(val), 0) << render(v);
}

TEST(Sequentialize, SystemInitialValues) {
    Vector vars{{AnnotatedVar{"x", "s", Role{1}}, std::int64_t{6}}};
    Valuation values{{"x", std::int64_t{3}}};
    SgpSystem sys = map_sgp_system(fixture_process("cond_copy"), fixture_sessions("cond_copy"), &vars, &values);
    EXPECT_EQ(std::get<std::int64_t>(sys.vars.at(AnnotatedVar{"x", "s", Role{1}})), 6);
    EXPECT_EQ(std::get<std::int64_t>(sys.vars.at(AnnotatedVar{"x", "s", Role{3}})), 3);
}

TEST(Sequentialize, InitSortMismatch) {
    Valuation values{{"x", true}};
    try {
        map_sgp_system(fixture_process("cond_copy"), fixture_sessions("cond_copy"), nullptr, &values);
        FAIL();
    } catch (const SeqError& e) {
        EXPECT_EQ(e.code(), "InitSortMismatch");
    }
}

TEST(Sequentialize, RejectsIllTypedInput) {
    try {
        map_sgp({fixture_process("prob_run")}, fixture_sessions("auction"));
        FAIL();
    } catch (const SeqError& e) {
        EXPECT_EQ(e.code(), "NotWellTyped");
        EXPECT_FALSE(e.diagnostics().empty());
    }
}

TEST(Sequentialize, ApplicationBound) {
    SeqOptions opts;
    opts.max_applications = 3;
    try {
        map_sgp({fixture_process("auction")}, fixture_sessions("auction"), opts);
        FAIL();
    } catch (const SeqError& e) {
        EXPECT_EQ(e.code(), "NonTermination");
    }
}

TEST(Sequentialize, SplitProcessesGiveTheSameProgram) {
    Process p = fixture_process("prob_run");
    std::vector<Process> parts;
    std::function<void(const Process&)> split = [&](const Process& q) {
        if (auto par = q.as<PPar>()) {
            split(par->left);
            split(par->right);
        } else {
            parts.push_back(q);
        }
    };
    split(p);
    ASSERT_EQ(parts.size(), 4u);
    EXPECT_EQ(map_sgp(parts, fixture_sessions("prob_run")), sgp(kProbRun));
}

TEST(Sequentialize, OutputSteps) {
    SgpSystem sys = map_sgp_system(fixture_process("prob_run"), fixture_sessions("prob_run"));
    std::size_t steps = 0;
    while (true) {
        auto next = step_sgp(sys, {});
        if (next.empty()) break;
        ASSERT_EQ(next.size(), 1u);
        sys = next[0].state;
        ++steps;
    }
    EXPECT_EQ(steps, 3u);
    EXPECT_EQ(std::get<std::int64_t>(sys.vars.at(AnnotatedVar{"x", "s", Role{2}})), 5);
    EXPECT_EQ(std::get<std::int64_t>(sys.vars.at(AnnotatedVar{"x", "s", Role{4}})), 4);
}
