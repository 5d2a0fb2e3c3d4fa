#include <json.hpp>

#include "mpst/typecheck.hpp"
#include "mpst/verify.hpp"

namespace mpst {

namespace {

nlohmann::json diagnostic_json(const Diagnostic& d) {
    nlohmann::json j{{"severity", d.severity == Severity::Error ? "error" : "warning"},
                     {"code", d.code},
                     {"message", d.message}};
    if (d.span.line) j["span"] = {{"line", d.span.line}, {"col", d.span.col}, {"len", d.span.len}};
    return j;
}

nlohmann::json value_json(const Value& v) {
    if (auto b = std::get_if<bool>(&v)) return *b;
    return std::get<std::int64_t>(v);
}

nlohmann::json verdict_json(const Verdict& v) {
    nlohmann::json j{{"property", v.property}, {"holds", v.holds}, {"params", nlohmann::json::object()},
                     {"message", v.message}, {"states", v.states}};
    for (const auto& [k, x] : v.params) j["params"][k] = value_json(x);
    if (v.witness) {
        nlohmann::json w{{"steps", v.witness->steps}};
        if (v.witness->loop_start) w["loop_start"] = *v.witness->loop_start;
        j["witness"] = w;
    }
    return j;
}

} // namespace

std::string to_json(const Verdict& v) { return verdict_json(v).dump(2); }

std::string to_json(const std::vector<Verdict>& vs) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& v : vs) j.push_back(verdict_json(v));
    return j.dump(2);
}

std::string to_json(const TypingReport& r) {
    nlohmann::json j{{"verdict", r.verdict}, {"trace", nlohmann::json::array()}, {"failures", nlohmann::json::array()}};
    for (const auto& t : r.trace) j["trace"].push_back({{"rule", t.rule}, {"subterm", t.subterm}});
    for (const auto& d : r.failures) j["failures"].push_back(diagnostic_json(d));
    return j.dump(2);
}

} // namespace mpst
