#include "mpst/promela.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "visit.hpp"

namespace mpst {

std::string flat_name(const AnnotatedVar& v) {
    return v.base + "_" + v.session + "_" + std::to_string(v.role.id);
}

EmitConfig emit_config(const Config& cfg) {
    EmitConfig out;
    out.params = cfg.params;
    out.ghosts = cfg.ghosts;
    out.ltl = cfg.ltl;
    out.values = cfg.init_values;
    return out;
}

namespace {

using detail::overloaded;

const char* symbol(BinOp op) {
    switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Mod: return "%";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::And: return "&&";
    case BinOp::Or: return "||";
    }
    return "?";
}

std::string literal(const Value& v) {
    if (auto b = std::get_if<bool>(&v)) return *b ? "true" : "false";
    return std::to_string(std::get<std::int64_t>(v));
}

const char* type_name(const Value& v) { return std::holds_alternative<bool>(v) ? "bool" : "int"; }

class Emitter {
public:
    Emitter(const SgpSystem& sys, const EmitConfig& cfg) : sys_(sys), cfg_(cfg) {
        for (const auto& g : cfg.ghosts)
            for (const auto& t : g.triggers) triggers_.emplace_back(t.on, g.name, t.value);
    }

    PromelaText run() {
        PromelaText out;
        std::string pre = preamble();
        std::string ltl;
        for (const auto& p : cfg_.ltl) ltl += "ltl " + p.name + " { " + p.text + " }\n";

        std::vector<std::string> selects;
        for (const auto& d : cfg_.params)
            selects.push_back("select(" + d.name + " : " + std::to_string(d.lo) + " .. " +
                              std::to_string(d.hi) + ");");
        proctype("Model", sys_.program, selects, true);

        std::string body;
        for (std::size_t i = 0; i < procs_.size(); ++i) {
            if (i) body += "\n";
            body += procs_[i];
        }

        out.source = pre;
        out.sections["preamble"] = {0, out.source.size()};
        if (!ltl.empty()) {
            out.source += "\n";
            std::size_t b = out.source.size();
            out.source += ltl;
            out.sections["ltl"] = {b, out.source.size()};
        } else {
            out.sections["ltl"] = {out.source.size(), out.source.size()};
        }
        out.source += "\n";
        std::size_t b = out.source.size();
        out.source += body;
        out.sections["body"] = {b, out.source.size()};
        return out;
    }

private:
    struct Trigger {
        Trigger(Provenance o, std::string g, Expr v) : on(std::move(o)), ghost(std::move(g)), value(std::move(v)) {}
        Provenance on;
        std::string ghost;
        Expr value;
    };

    struct Proc {
        std::size_t int_temps = 0;
        std::size_t bool_temps = 0;
    };

    const SgpSystem& sys_;
    const EmitConfig& cfg_;
    std::vector<Trigger> triggers_;
    std::map<AnnotatedVar, Value> decls_;
    std::vector<std::string> procs_;
    std::size_t next_label_ = 0;
    std::size_t next_proc_ = 0;

    std::string name(const AnnotatedVar& v) const {
        auto it = cfg_.rename.find(v);
        return it == cfg_.rename.end() ? flat_name(v) : it->second;
    }

    std::string expr(const Expr& e) const {
        auto sub = [&](const Expr& x) {
            std::string s = expr(x);
            return x.is<Binary>() ? "(" + s + ")" : s;
        };
        return std::visit(overloaded{
                              [&](const IntLit& x) {
                                  return x.value < 0 ? "(" + std::to_string(x.value) + ")" : std::to_string(x.value);
                              },
                              [&](const BoolLit& x) { return std::string(x.value ? "true" : "false"); },
                              [&](const VarRef& x) { return x.name; },
                              [&](const ParamRef& x) { return x.name; },
                              [&](const AVarRef& x) { return name(x.var); },
                              [&](const Unary& x) { return std::string(x.op == UnOp::Neg ? "-" : "!") + sub(x.arg); },
                              [&](const Binary& x) { return sub(x.lhs) + " " + symbol(x.op) + " " + sub(x.rhs); },
                          },
                          e.node().v);
    }

    std::string preamble() {
        for (const auto& [v, val] : sys_.vars) decls_.emplace(v, val);
        for (const auto& v : annotated_vars(sys_.program)) decls_.emplace(v, Value{std::int64_t{0}});

        std::set<std::string> taken;
        std::string out;
        auto declare = [&](const std::string& n, const std::string& line) {
            if (!taken.insert(n).second)
                throw UnsupportedConstruct("identifier '" + n + "' is declared twice in the emitted program");
            out += line + "\n";
        };
        for (const auto& [v, val] : decls_) {
            std::string n = name(v);
            declare(n, std::string(type_name(val)) + " " + n + " = " + literal(val) + ";");
        }
        for (const auto& g : cfg_.ghosts)
            declare(g.name, std::string(type_name(g.init)) + " " + g.name + " = " + literal(g.init) + ";");

        std::set<std::string> ranged;
        for (const auto& d : cfg_.params) {
            ranged.insert(d.name);
            declare(d.name, "int " + d.name + ";");
        }
        for (const auto& p : params(sys_.program)) {
            if (ranged.count(p)) continue;
            auto it = cfg_.values.find(p);
            Value v = it == cfg_.values.end() ? Value{std::int64_t{0}} : it->second;
            declare(p, std::string(type_name(v)) + " " + p + " = " + literal(v) + ";");
        }
        return out;
    }

    Sort sort_of_var(const AnnotatedVar& v) const {
        auto it = decls_.find(v);
        return it != decls_.end() && std::holds_alternative<bool>(it->second) ? Sort::Bool : Sort::Int;
    }

    void proctype(const std::string& pname, const Sgp& s, const std::vector<std::string>& head, bool active) {
        std::size_t slot = procs_.size();
        procs_.emplace_back();
        Proc pr;
        std::ostringstream body;
        std::map<std::string, std::string> labels;
        stmts(s, body, pr, labels, 1);

        std::ostringstream os;
        os << (active ? "active proctype " : "proctype ") << pname << "() {\n";
        for (std::size_t i = 1; i <= pr.int_temps; ++i) os << "    int tmp_" << i << ";\n";
        for (std::size_t i = 1; i <= pr.bool_temps; ++i) os << "    bool btmp_" << i << ";\n";
        for (const auto& h : head) os << "    " << h << "\n";
        os << body.str();
        os << "LEnd: skip;\n}\n";
        procs_[slot] = os.str();
    }

    static std::string pad(int depth) { return std::string(4 * depth, ' '); }

    void ghosts(const std::optional<Provenance>& origin, std::ostringstream& os, int depth) const {
        if (!origin) return;
        for (const auto& t : triggers_)
            if (t.on == *origin) os << pad(depth) << t.ghost << " = " << expr(t.value) << ";\n";
    }

    void assign(const SAssign& a, std::ostringstream& os, Proc& pr, int depth) const {
        bool clash = false;
        for (std::size_t j = 1; j < a.values.size() && !clash; ++j) {
            auto reads = annotated_vars(a.values[j]);
            for (std::size_t i = 0; i < j; ++i)
                if (reads.count(a.targets[i])) clash = true;
        }
        if (!clash) {
            for (std::size_t i = 0; i < a.targets.size(); ++i)
                os << pad(depth) << name(a.targets[i]) << " = " << expr(a.values[i]) << ";\n";
            return;
        }
        std::vector<std::string> temps;
        std::size_t ints = 0, bools = 0;
        for (const auto& t : a.targets)
            temps.push_back(sort_of_var(t) == Sort::Bool ? "btmp_" + std::to_string(++bools)
                                                         : "tmp_" + std::to_string(++ints));
        pr.int_temps = std::max(pr.int_temps, ints);
        pr.bool_temps = std::max(pr.bool_temps, bools);
        os << pad(depth) << "d_step {\n";
        for (std::size_t i = 0; i < a.targets.size(); ++i)
            os << pad(depth + 1) << temps[i] << " = " << expr(a.values[i]) << ";\n";
        for (std::size_t i = 0; i < a.targets.size(); ++i)
            os << pad(depth + 1) << name(a.targets[i]) << " = " << temps[i] << ";\n";
        os << pad(depth) << "};\n";
    }

    void stmts(const Sgp& s, std::ostringstream& os, Proc& pr, std::map<std::string, std::string>& labels,
               int depth) {
        std::visit(overloaded{
                       [&](const SAssign& a) {
                           if (a.targets.empty())
                               os << pad(depth) << "skip;\n";
                           else
                               assign(a, os, pr, depth);
                           ghosts(a.origin, os, depth);
                           stmts(a.cont, os, pr, labels, depth);
                       },
                       [&](const SIf& i) {
                           os << pad(depth) << "if\n";
                           os << pad(depth) << ":: (" << expr(i.cond) << ") ->\n";
                           stmts(i.then_branch, os, pr, labels, depth + 1);
                           os << pad(depth) << ":: else ->\n";
                           stmts(i.else_branch, os, pr, labels, depth + 1);
                           os << pad(depth) << "fi;\n";
                       },
                       [&](const SPar& p) {
                           std::vector<Sgp> sides;
                           flatten(s, sides);
                           for (const auto& side : sides) {
                               if (!free_svars(side).empty())
                                   throw UnsupportedConstruct("a recursion variable crosses a parallel composition");
                               std::string n = "Model_" + std::to_string(++next_proc_);
                               os << pad(depth) << "run " << n << "();\n";
                               proctype(n, side, {}, false);
                           }
                           (void)p;
                           os << pad(depth) << "goto LEnd;\n";
                       },
                       [&](const SRec& r) {
                           std::string label = "L" + r.var + "_" + std::to_string(++next_label_);
                           auto saved = labels;
                           labels[r.var] = label;
                           os << label << ":\n";
                           stmts(r.body, os, pr, labels, depth);
                           labels = std::move(saved);
                       },
                       [&](const SVar& v) {
                           auto it = labels.find(v.var);
                           if (it == labels.end())
                               throw UnsupportedConstruct("unbound recursion variable '" + v.var + "'");
                           os << pad(depth) << "goto " << it->second << ";\n";
                       },
                       [&](const SEnd&) { os << pad(depth) << "goto LEnd;\n"; },
                   },
                   s.node().v);
    }

    static void flatten(const Sgp& s, std::vector<Sgp>& out) {
        if (auto p = s.as<SPar>()) {
            flatten(p->left, out);
            flatten(p->right, out);
        } else if (!s.is<SEnd>()) {
            out.push_back(s);
        }
    }
};

} // namespace

PromelaText emit_program(const SgpSystem& sys, const EmitConfig& cfg) {
    return Emitter(sys, cfg).run();
}

} // namespace mpst
