// Acceptance run: one PASS/FAIL line per criterion. Exits non-zero if any criterion fails.
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <regex>
#include <sstream>

#include "mpst/projection.hpp"
#include "mpst/promela.hpp"
#include "mpst/semantics.hpp"
#include "mpst/sequentialize.hpp"
#include "mpst/typecheck.hpp"
#include "mpst/verify.hpp"
#include "mutations.hpp"
#include "promela_lite.hpp"
#include "properties.hpp"
#include "support.hpp"

using namespace mpst;
using namespace mpst::testing;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kProjectionSeconds = 1.0;
constexpr double kCorrespondenceSeconds = 10.0;
constexpr std::size_t kCorrespondenceStates = 10'000;
constexpr std::size_t kPropertySystems = 200;
constexpr double kPropertySeconds = 300.0;
constexpr double kLtlSeconds = 120.0;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", s);
    return buf;
}

/// Collects the first failure of a criterion; later checks are still evaluated.
struct Check {
    bool ok = true;
    std::string why;
    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            why = what;
        }
    }
};

struct Outcome {
    bool ok;
    std::string detail;
};

Outcome projection_golden() {
    Check c;
    GlobalType g = fixture_type("auction");
    const char* expected[] = {
        "?[2]bid(Int). ![3]l(Int). rec t. ?[3]{ bid(Int). ![2]l(Int). ?[2]{ bid(Int). ![3]l(Int). t ; "
        "no(). ![3]s(Int). end } ; no(). ![2]s(Int). end }",
        "![1]bid(Int). rec t. ?[1]{ l(Int). ![1]{ bid(Int). t ; no(). end } ; s(Int). end }",
        "?[1]l(Int). rec t. ![1]{ bid(Int). ?[1]{ l(Int). t ; s(Int). end } ; no(). end }",
    };
    auto t0 = Clock::now();
    std::vector<LocalType> got;
    for (std::uint32_t r = 1; r <= 3; ++r) got.push_back(project(g, Role{r}));
    double t = seconds_since(t0);
    for (std::uint32_t r = 1; r <= 3; ++r)
        c.require(alpha_equal(got[r - 1], local(expected[r - 1])), "role " + std::to_string(r) + " gives " +
                                                                       render(got[r - 1]));
    c.require(t < kProjectionSeconds, "took " + fmt(t) + " s");
    return {c.ok, c.ok ? "roles 1, 2, 3 match in " + fmt(t) + " s" : c.why};
}

Outcome typechecking() {
    Check c;
    for (const char* stem : {"auction", "prob_run"}) {
        TypingReport r = well_typed(fixture_process(stem), fixture_sessions(stem));
        c.require(r.verdict, std::string(stem) + " is not well-typed");
    }
    std::size_t rejected = 0;
    std::string base = fixture_text("auction.proc");
    for (const auto& m : auction_mutations()) {
        std::string text = apply_mutation(m, base);
        c.require(!text.empty(), m.name + ": edit does not apply");
        if (text.empty()) continue;
        TypingReport r = well_typed(value_or_throw(parse_process(text, declared_params(text))),
                                    fixture_sessions("auction"));
        bool localized = !r.failures.empty() && r.failures[0].code == m.rule && !r.failures[0].message.empty();
        c.require(!r.verdict, m.name + ": accepted");
        c.require(localized, m.name + ": diagnostic does not name rule " + m.rule);
        if (!r.verdict && localized) ++rejected;
    }
    return {c.ok, c.ok ? "2 well-typed, " + std::to_string(rejected) + "/10 mutations rejected by rule" : c.why};
}

Outcome sequentialisation_goldens() {
    Check c;
    struct Golden {
        const char* stem;
        const char* sgp;
    };
    const Golden goldens[] = {
        {"prob_run", "tau. x@s[2] := 5. x@s[4] := 4. 0"},
        {"auction",
         "tau. b@s[1] := incB1 + 0. b@s[3] := b@s[1]. rec X. "
         "if incB2 + b@s[3] <= maxB2 then b@s[1] := incB2 + b@s[3]. b@s[2] := b@s[1]. "
         "  if incB1 + b@s[2] <= maxB1 then b@s[1] := incB1 + b@s[2]. b@s[3] := b@s[1]. X "
         "  else tau. b@s[3] := b@s[1]. 0 "
         "else tau. b@s[2] := b@s[1]. 0"},
        {"cond_copy",
         "tau. if x@s[1] > 5 then x@s[2] := 42. (if x@s[3] > 5 then x@s[4] := 42. 0 else x@s[4] := 0. 0) "
         "else x@s[2] := 0. (if x@s[3] > 5 then x@s[4] := 42. 0 else x@s[4] := 0. 0)"},
    };
    for (const auto& g : goldens) {
        Sgp got = map_sgp({fixture_process(g.stem)}, fixture_sessions(g.stem));
        c.require(got == sgp(g.sgp), std::string(g.stem) + " gives " + render(got));
    }
    return {c.ok, c.ok ? "prob_run, auction, cond_copy match" : c.why};
}

Outcome correspondence() {
    Check c;
    Bounds b;
    b.params = desk_params();
    b.max_states = kCorrespondenceStates;
    auto t0 = Clock::now();
    std::size_t most = 0;
    for (const char* stem : {"prob_run", "auction"}) {
        Process p = fixture_process(stem);
        auto s = fixture_sessions(stem);
        std::string name = stem;
        Verdict sound = check_soundness(p, s, b);
        CompletenessReport comp = check_weak_completeness(p, s, b);
        Verdict corr = check_correspondence(p, s, b);
        c.require(sound.holds, name + ": soundness fails: " + sound.message);
        c.require(comp.weak.holds, name + ": weak completeness fails: " + comp.weak.message);
        c.require(corr.holds, name + ": correspondence fails: " + corr.message);
        if (name == "prob_run") c.require(!comp.strict.holds, "prob_run: strict completeness holds");
        for (const Verdict* v : {&sound, &comp.weak, &corr}) most = std::max(most, v->states);
    }
    double t = seconds_since(t0);
    c.require(most < kCorrespondenceStates, std::to_string(most) + " states");
    c.require(t < kCorrespondenceSeconds, "took " + fmt(t) + " s");
    return {c.ok, c.ok ? "sound, weakly complete, strict fails on prob_run; " + std::to_string(most) +
                             " states max, " + fmt(t) + " s"
                       : c.why};
}

Outcome property_suite() {
    auto t0 = Clock::now();
    auto samples = draw_samples(20261016, kPropertySystems);
    std::size_t failures = 0, states = 0;
    std::string first;
    for (const auto& s : samples) {
        states += s.states.size();
        for (const auto& name : property_names()) {
            auto f = check_property(name, s);
            if (!f.empty() && first.empty()) first = name + " on " + describe(s) + ": " + f.front();
            failures += f.size();
        }
    }
    double t = seconds_since(t0);
    bool ok = failures == 0 && t < kPropertySeconds && samples.size() >= kPropertySystems;
    std::string detail = std::to_string(samples.size()) + " systems, " + std::to_string(states) + " states, " +
                         std::to_string(failures) + " failures, " + fmt(t) + " s";
    return {ok, ok || first.empty() ? detail : detail + "; " + first};
}

Outcome ltl() {
    Check c;
    auto t0 = Clock::now();
    SgpSystem sys = map_sgp_system(fixture_process("auction"), fixture_sessions("auction"));
    Config honest = fixture_config("auction.cfg");
    const std::map<std::string, bool> expected{{"P1", true}, {"P2", true}, {"P3", false},
                                               {"P4", true}, {"P5", true}, {"P6", true}};
    std::string got;
    for (const auto& v : mc_check(sys, honest.ltl, emit_config(honest))) {
        got += v.property + (v.holds ? "+ " : "- ");
        auto it = expected.find(v.property);
        c.require(it != expected.end() && it->second == v.holds, v.property + " gives " +
                                                                     (v.holds ? "holds" : "violated"));
    }
    Config malicious = fixture_config("auction_malicious.cfg");
    Verdict p2 = mc_check(sys, malicious.find_ltl("P2")->formula, emit_config(malicious));
    c.require(!p2.holds, "P2 holds with incB2 = 0");
    double t = seconds_since(t0);
    c.require(t < kLtlSeconds, "took " + fmt(t) + " s");
    return {c.ok, c.ok ? got + "; incB2 = 0: P2- ; " + fmt(t) + " s" : c.why};
}

Outcome promela() {
    Check c;
    struct Golden {
        const char* stem;
        const char* cfg;
    };
    for (const Golden g : {Golden{"prob_run", ""}, Golden{"auction", "auction.cfg"},
                           Golden{"revised_auction", "revised_auction.cfg"}}) {
        SgpSystem sys = map_sgp_system(fixture_process(g.stem), fixture_sessions(g.stem));
        EmitConfig ec = *g.cfg ? emit_config(fixture_config(g.cfg)) : EmitConfig{};
        std::string src = emit_program(sys, ec).source;
        std::string expected = read_file(std::string(MPST_GOLDEN) + "/" + g.stem + ".pml");
        c.require(src == expected, std::string(g.stem) + " differs from its golden");
        c.require(src.find("\n    skip;\n") != std::string::npos, std::string(g.stem) + ": no skip for tau");
        c.require(src.find("goto LEnd;") != std::string::npos && src.find("\nLEnd: skip;\n") != std::string::npos,
                  std::string(g.stem) + ": no LEnd");
        if (std::string(g.stem) != "prob_run")
            c.require(std::regex_search(src, std::regex(R"(\nLX_\w+:\n[\s\S]*goto LX_\w+;)")),
                      std::string(g.stem) + ": no loop label");
    }
    return {c.ok, c.ok ? "3 goldens byte-identical; skip, goto LX, LEnd present" : c.why};
}

Outcome simultaneous_assignment() {
    Check c;
    SgpSystem sys = value_or_throw(parse_sgp_system(fixture_text("swap.sgp")));
    AnnotatedVar x{"x", "s", Role{1}}, y{"y", "s", Role{1}};
    auto next = step_sgp(sys, {});
    c.require(next.size() == 1, "interpreter: expected one step");
    if (next.size() == 1) {
        c.require(std::get<std::int64_t>(next[0].state.vars.at(x)) == 2 &&
                      std::get<std::int64_t>(next[0].state.vars.at(y)) == 1,
                  "interpreter: wrong values");
    }
    std::string src = emit_program(sys).source;
    c.require(src.find("d_step {") != std::string::npos && src.find("tmp_1") != std::string::npos,
              "Promela: no temporaries");
    auto vars = run_straight_line(src);
    c.require(vars.at("x_s_1") == 2 && vars.at("y_s_1") == 1, "Promela: wrong values");
    return {c.ok, c.ok ? "(1,2) -> (2,1) in interpreter and Promela" : c.why};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 projection golden", projection_golden},
        {"2 typechecking", typechecking},
        {"3 sequentialisation goldens", sequentialisation_goldens},
        {"4 correspondence", correspondence},
        {"5 property suite", property_suite},
        {"6 LTL", ltl},
        {"7 Promela", promela},
        {"8 simultaneous assignment", simultaneous_assignment},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o{false, ""};
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.ok ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
        failed += o.ok ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
