#include "mpst/cli.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpst/projection.hpp"
#include "mpst/promela.hpp"
#include "mpst/semantics.hpp"
#include "mpst/sequentialize.hpp"
#include "mpst/typecheck.hpp"
#include "mpst/verify.hpp"

namespace mpst {

namespace {

using json = nlohmann::json;

class UsageError : public Error {
public:
    explicit UsageError(const std::string& message) : Error("Usage", message) {}
};

struct Io {
    std::istream& in;
    std::ostream& out;
    std::ostream& err;
    bool json = false;
    bool stdin_used = false;
};

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string read_input(Io& io, const std::string& path) {
    std::stringstream ss;
    if (path == "-") {
        if (io.stdin_used) throw UsageError("standard input can only be read once");
        io.stdin_used = true;
        ss << io.in.rdbuf();
        return ss.str();
    }
    std::ifstream f(path);
    if (!f) throw UsageError("cannot read '" + path + "'");
    ss << f.rdbuf();
    return ss.str();
}

void write_output(Io& io, const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        io.out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + path + "'");
    f << text;
}

std::pair<std::string, std::string> split_binding(const std::string& kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == kv.size())
        throw UsageError("expected key=value, got '" + kv + "'");
    return {kv.substr(0, eq), kv.substr(eq + 1)};
}

Value parse_value(const std::string& text) {
    if (text == "true") return true;
    if (text == "false") return false;
    std::int64_t v = 0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size()) throw UsageError("not a value: '" + text + "'");
    return v;
}

Valuation parse_valuation(const std::vector<std::string>& kvs) {
    Valuation out;
    for (const auto& kv : kvs) {
        auto [k, v] = split_binding(kv);
        out[k] = parse_value(v);
    }
    return out;
}

struct Init {
    Vector vars;
    Valuation values;
};

Init parse_init(const std::vector<std::string>& kvs) {
    static const std::regex annotated(R"(([A-Za-z_]\w*)@([A-Za-z_]\w*)\[(\d+)\])");
    Init out;
    for (const auto& kv : kvs) {
        auto [k, v] = split_binding(kv);
        std::smatch m;
        if (std::regex_match(k, m, annotated))
            out.vars[AnnotatedVar{m[1], m[2], Role{static_cast<std::uint32_t>(std::stoul(m[3]))}}] = parse_value(v);
        else
            out.values[k] = parse_value(v);
    }
    return out;
}

std::vector<SessionBinding> parse_types(Io& io, const std::vector<std::string>& bindings) {
    std::vector<SessionBinding> out;
    for (const auto& b : bindings) {
        auto [name, path] = split_binding(b);
        out.push_back({value_or_throw(parse_global_type(read_input(io, path))), name});
    }
    return out;
}

Process load_process(Io& io, const std::string& path) {
    std::string text = read_input(io, path);
    return value_or_throw(parse_process(text, declared_params(text)));
}

Config load_config(Io& io, const std::string& path) {
    if (path.empty()) return {};
    return value_or_throw(parse_config(read_input(io, path)));
}

/// A `.proc` file (or any file given with --types) is sequentialized first.
SgpSystem load_system(Io& io, const std::string& path, const std::vector<std::string>& types, Init init) {
    if (!types.empty() || ends_with(path, ".proc")) {
        if (types.empty()) throw UsageError("--types is required to sequentialize '" + path + "'");
        Process p = load_process(io, path);
        auto sessions = parse_types(io, types);
        return map_sgp_system(p, sessions, &init.vars, &init.values);
    }
    SgpSystem sys = value_or_throw(parse_sgp_system(read_input(io, path)));
    for (const auto& [v, x] : init.vars) sys.vars[v] = x;
    return sys;
}

json diagnostic_json(const Diagnostic& d) {
    json j{{"code", d.code}, {"message", d.message}};
    if (d.span.line) j["span"] = {{"line", d.span.line}, {"col", d.span.col}, {"len", d.span.len}};
    return j;
}

std::string params_text(const Valuation& v) {
    std::string out;
    for (const auto& [k, x] : v) out += (out.empty() ? "" : ", ") + k + "=" + to_string(x);
    return out;
}

void print_verdict(Io& io, const Verdict& v) {
    io.out << v.property << ": " << (v.holds ? "holds" : "violated") << " (" << v.message << ")\n";
    if (!v.params.empty()) io.out << "  params: " << params_text(v.params) << "\n";
    if (!v.witness) return;
    for (std::size_t i = 0; i < v.witness->steps.size(); ++i) {
        bool loop = v.witness->loop_start && *v.witness->loop_start == i;
        std::string step = v.witness->steps[i];
        for (auto at = step.find('\n'); at != std::string::npos; at = step.find('\n', at + 9))
            step.replace(at, 1, "\n        ");
        io.out << (loop ? "  loop> " : "        ") << step << "\n";
    }
}

int report_error(Io& io, const Error& e, const std::vector<Diagnostic>& diags, int code) {
    if (io.json) {
        json j{{"error", {{"code", e.code()}, {"message", e.what()}, {"diagnostics", json::array()}}}};
        for (const auto& d : diags) j["error"]["diagnostics"].push_back(diagnostic_json(d));
        io.out << j.dump(2) << "\n";
    } else {
        io.err << "error[" << e.code() << "]: " << e.what() << "\n";
        for (const auto& d : diags) io.err << "  " << to_string(d) << "\n";
    }
    return code;
}

// ------------------------------------------------------------ subcommands

struct ProjectArgs {
    std::string file;
    std::uint32_t role = 0;
};

int cmd_project(Io& io, const ProjectArgs& a) {
    GlobalType g = value_or_throw(parse_global_type(read_input(io, a.file)));
    LocalType l = project(g, Role{a.role});
    if (io.json)
        io.out << json{{"role", a.role}, {"local", render(l)}}.dump(2) << "\n";
    else
        io.out << render(l) << "\n";
    return kExitOk;
}

struct CheckArgs {
    std::string file;
    std::vector<std::string> types;
};

int cmd_check(Io& io, const CheckArgs& a) {
    Process p = load_process(io, a.file);
    TypingReport r = well_typed(p, parse_types(io, a.types));
    if (io.json) {
        io.out << to_json(r) << "\n";
    } else {
        io.out << (r.verdict ? "well-typed" : "not well-typed") << "\n";
        for (const auto& d : r.failures) io.out << "  " << to_string(d) << "\n";
    }
    return r.verdict ? kExitOk : kExitFailure;
}

struct SeqArgs {
    std::string file;
    std::vector<std::string> types;
    std::vector<std::string> init;
    std::string output;
};

int cmd_seq(Io& io, const SeqArgs& a) {
    if (a.types.empty()) throw UsageError("--types is required");
    SgpSystem sys = load_system(io, a.file, a.types, parse_init(a.init));
    std::string text = render(sys) + "\n";
    if (io.json && a.output.empty()) {
        io.out << json{{"sgp", render(sys)}, {"size", size(sys.program)}}.dump(2) << "\n";
        return kExitOk;
    }
    write_output(io, a.output, text);
    if (io.json) io.out << json{{"output", a.output}, {"size", size(sys.program)}}.dump(2) << "\n";
    return kExitOk;
}

struct EmitArgs {
    std::string file;
    std::string config;
    std::vector<std::string> types;
    std::vector<std::string> init;
    std::string output;
};

int cmd_emit(Io& io, const EmitArgs& a) {
    Config cfg = load_config(io, a.config);
    Init init{cfg.init_vars, cfg.init_values};
    Init extra = parse_init(a.init);
    for (const auto& [k, v] : extra.vars) init.vars[k] = v;
    for (const auto& [k, v] : extra.values) init.values[k] = v;
    SgpSystem sys = load_system(io, a.file, a.types, init);
    EmitConfig ec = emit_config(cfg);
    for (const auto& [k, v] : extra.values) ec.values[k] = v;
    PromelaText pml = emit_program(sys, ec);
    if (io.json && a.output.empty()) {
        io.out << json{{"promela", pml.source}}.dump(2) << "\n";
        return kExitOk;
    }
    write_output(io, a.output, pml.source);
    if (io.json) io.out << json{{"output", a.output}, {"bytes", pml.source.size()}}.dump(2) << "\n";
    return kExitOk;
}

struct SimulateArgs {
    std::string file;
    std::vector<std::string> types;
    std::vector<std::string> init;
    std::vector<std::string> params;
    std::size_t max_steps = 1000;
};

struct TraceStep {
    std::string rule;
    std::string state;
};

int cmd_simulate(Io& io, const SimulateArgs& a) {
    Valuation params = parse_valuation(a.params);
    std::vector<TraceStep> trace;
    std::string stop = "step limit";
    bool process = ends_with(a.file, ".proc") && a.types.empty();
    if (process) {
        Init init = parse_init(a.init);
        for (const auto& [k, v] : init.values) params.emplace(k, v);
        AnnotatedState st{load_process(io, a.file), init.vars};
        trace.push_back({"", render(st.process) + (st.store.empty() ? "" : " with " + render(st.store))});
        for (std::size_t i = 0; i < a.max_steps; ++i) {
            auto next = step_annotated(st, params, AnnotationInit{init.vars, init.values});
            if (next.empty()) {
                stop = struct_normalize(st.process).is<PEnd>() ? "terminated" : "no step";
                break;
            }
            std::string rule = next.front().rule;
            if (auto c = next.front().comm)
                rule += " " + c->session + "[" + std::to_string(c->from.id) + "->" + std::to_string(c->to.id) +
                        "]!" + c->label;
            st = std::move(next.front().state);
            trace.push_back({rule, render(st.process) + (st.store.empty() ? "" : " with " + render(st.store))});
        }
    } else {
        SgpSystem sys = load_system(io, a.file, a.types, parse_init(a.init));
        trace.push_back({"", render(sys, false)});
        for (std::size_t i = 0; i < a.max_steps; ++i) {
            auto next = step_sgp(sys, params);
            if (next.empty()) {
                stop = sgp_head(sys.program).is<SEnd>() ? "terminated" : "no step";
                break;
            }
            std::string rule = next.front().rule;
            if (auto o = next.front().origin) rule += " " + render(*o);
            sys = std::move(next.front().state);
            trace.push_back({rule, render(sys, false)});
        }
    }
    if (io.json) {
        json j{{"steps", json::array()}, {"stop", stop}};
        for (const auto& s : trace) j["steps"].push_back({{"rule", s.rule}, {"state", s.state}});
        io.out << j.dump(2) << "\n";
    } else {
        for (std::size_t i = 0; i < trace.size(); ++i) {
            if (i) io.out << "-- " << trace[i].rule << "\n";
            io.out << trace[i].state << "\n";
        }
        io.out << "(" << stop << " after " << trace.size() - 1 << " step(s))\n";
    }
    return kExitOk;
}

struct CorrespondArgs {
    std::string file;
    std::vector<std::string> types;
    std::vector<std::string> params;
    std::vector<std::string> bounds;
};

Bounds parse_bounds(const std::vector<std::string>& kvs, const std::vector<std::string>& params) {
    Bounds b;
    b.params = parse_valuation(params);
    for (const auto& kv : kvs) {
        auto [k, v] = split_binding(kv);
        Value x = parse_value(v);
        auto n = std::get_if<std::int64_t>(&x);
        if (!n || *n <= 0) throw UsageError("bound '" + k + "' must be a positive integer");
        if (k == "max_states")
            b.max_states = static_cast<std::size_t>(*n);
        else if (k == "max_depth")
            b.max_depth = static_cast<std::size_t>(*n);
        else
            throw UsageError("unknown bound '" + k + "' (expected max_states or max_depth)");
    }
    return b;
}

int cmd_correspond(Io& io, const CorrespondArgs& a) {
    if (a.types.empty()) throw UsageError("--types is required");
    Process p = load_process(io, a.file);
    auto sessions = parse_types(io, a.types);
    Bounds b = parse_bounds(a.bounds, a.params);
    std::vector<Verdict> vs;
    vs.push_back(check_soundness(p, sessions, b));
    auto c = check_weak_completeness(p, sessions, b);
    vs.push_back(c.weak);
    vs.push_back(c.strict);
    vs.push_back(check_correspondence(p, sessions, b));
    if (io.json)
        io.out << to_json(vs) << "\n";
    else
        for (const auto& v : vs) print_verdict(io, v);
    bool ok = vs[0].holds && vs[1].holds && vs[3].holds;
    return ok ? kExitOk : kExitFailure;
}

struct McArgs {
    std::string file;
    std::string config;
    std::vector<std::string> types;
    std::vector<std::string> init;
    std::vector<std::string> ltl;
    std::vector<std::string> params;
    std::vector<std::string> bounds;
};

int cmd_mc(Io& io, const McArgs& a) {
    Config cfg = load_config(io, a.config);
    SgpSystem sys = load_system(io, a.file, a.types, {cfg.init_vars, cfg.init_values});
    std::vector<LtlProperty> props;
    if (a.ltl.empty()) {
        props = cfg.ltl;
    } else {
        for (const auto& name : a.ltl) {
            const LtlProperty* p = cfg.find_ltl(name);
            if (!p) throw UsageError("no property named '" + name + "' in the config");
            props.push_back(*p);
        }
    }
    if (props.empty()) throw UsageError("no LTL properties to check");
    Bounds b = parse_bounds(a.bounds, a.params);
    auto vs = mc_check(sys, props, emit_config(cfg), b);
    if (io.json)
        io.out << to_json(vs) << "\n";
    else
        for (const auto& v : vs) print_verdict(io, v);
    bool ok = std::all_of(vs.begin(), vs.end(), [](const Verdict& v) { return v.holds; });
    return ok ? kExitOk : kExitFailure;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    Io io{in, out, err};
    CLI::App app{"Sequentialisation of multiparty session processes", args.empty() ? "mpstseq" : args[0]};
    app.require_subcommand(1);
    app.add_flag("--json", io.json, "Machine-readable output");
    app.fallthrough();

    ProjectArgs pa;
    auto* project = app.add_subcommand("project", "Project a global type onto a role");
    project->add_option("file", pa.file, "Global type file")->required();
    project->add_option("--role,-r", pa.role, "Role number")->required()->check(CLI::PositiveNumber);

    CheckArgs ca;
    auto* check = app.add_subcommand("check", "Type-check a process against global types");
    check->add_option("file", ca.file, "Process file")->required();
    check->add_option("--types,-t", ca.types, "Session bindings s=file.gt")->required();

    SeqArgs sa;
    auto* seq = app.add_subcommand("seq", "Sequentialize a process");
    seq->add_option("file", sa.file, "Process file")->required();
    seq->add_option("--types,-t", sa.types, "Session bindings s=file.gt")->required();
    seq->add_option("--init", sa.init, "Initial values x=v or x@s[r]=v");
    seq->add_option("-o,--output", sa.output, "Output file");

    EmitArgs ea;
    auto* emit = app.add_subcommand("emit", "Emit Promela for an SGP system or a process");
    emit->add_option("file", ea.file, "SGP system or process file")->required();
    emit->add_option("--config,-c", ea.config, "Verification config");
    emit->add_option("--types,-t", ea.types, "Session bindings s=file.gt");
    emit->add_option("--init", ea.init, "Initial values x=v or x@s[r]=v");
    emit->add_option("-o,--output", ea.output, "Output file");

    SimulateArgs ma;
    auto* simulate = app.add_subcommand("simulate", "Run a process or SGP system, taking the first step each time");
    simulate->add_option("file", ma.file, "Process or SGP system file")->required();
    simulate->add_option("--types,-t", ma.types, "Session bindings s=file.gt; simulates the sequentialization");
    simulate->add_option("--init", ma.init, "Initial values x=v or x@s[r]=v");
    simulate->add_option("--params,-p", ma.params, "Parameter values k=v");
    simulate->add_option("--max-steps", ma.max_steps, "Step limit");

    CorrespondArgs ra;
    auto* correspond = app.add_subcommand("correspond", "Check a process against its sequentialization");
    correspond->add_option("file", ra.file, "Process file")->required();
    correspond->add_option("--types,-t", ra.types, "Session bindings s=file.gt")->required();
    correspond->add_option("--params,-p", ra.params, "Parameter values k=v");
    correspond->add_option("--bounds,-b", ra.bounds, "max_states=N or max_depth=N");

    McArgs ka;
    auto* mc = app.add_subcommand("mc", "Check LTL properties on every run of a sequential system");
    mc->add_option("file", ka.file, "SGP system or process file")->required();
    mc->add_option("--config,-c", ka.config, "Verification config")->required();
    mc->add_option("--types,-t", ka.types, "Session bindings s=file.gt");
    mc->add_option("--ltl,-l", ka.ltl, "Property names (default: all)");
    mc->add_option("--params,-p", ka.params, "Fixed parameter values k=v");
    mc->add_option("--bounds,-b", ka.bounds, "max_states=N or max_depth=N");

    std::vector<const char*> argv;
    std::string name = args.empty() ? "mpstseq" : args[0];
    argv.push_back(name.c_str());
    for (std::size_t i = 1; i < args.size(); ++i) argv.push_back(args[i].c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*project) return cmd_project(io, pa);
        if (*check) return cmd_check(io, ca);
        if (*seq) return cmd_seq(io, sa);
        if (*emit) return cmd_emit(io, ea);
        if (*simulate) return cmd_simulate(io, ma);
        if (*correspond) return cmd_correspond(io, ra);
        if (*mc) return cmd_mc(io, ka);
    } catch (const ParseError& e) {
        return report_error(io, e, e.diagnostics(), kExitUsage);
    } catch (const UsageError& e) {
        return report_error(io, e, {}, kExitUsage);
    } catch (const BoundExceeded& e) {
        return report_error(io, e, {}, kExitUsage);
    } catch (const SeqError& e) {
        return report_error(io, e, e.diagnostics(), kExitFailure);
    } catch (const PreconditionError& e) {
        return report_error(io, e, e.diagnostics(), kExitFailure);
    } catch (const Error& e) {
        return report_error(io, e, {}, kExitFailure);
    }
    return kExitUsage;
}

} // namespace mpst
