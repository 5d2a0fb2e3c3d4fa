#include "mpst/semantics.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <set>

#include "mpst/surface.hpp"
#include "mpst/typecheck.hpp"
#include "visit.hpp"

namespace mpst {

using detail::overloaded;

namespace {

constexpr int kUnfoldLimit = 1000;

using Lookup = std::function<Value(const Expr&)>;

std::int64_t as_int(const Value& v, const Expr& e) {
    if (auto i = std::get_if<std::int64_t>(&v)) return *i;
    throw EvalError("SortMismatch", render(e) + " is not an Int");
}

bool as_bool(const Value& v, const Expr& e) {
    if (auto b = std::get_if<bool>(&v)) return *b;
    throw EvalError("SortMismatch", render(e) + " is not a Bool");
}

Value eval(const Expr& e, const Lookup& leaf) {
    return std::visit(
        overloaded{
            [&](const IntLit& x) -> Value { return x.value; },
            [&](const BoolLit& x) -> Value { return x.value; },
            [&](const Unary& u) -> Value {
                Value a = eval(u.arg, leaf);
                if (u.op == UnOp::Not) return !as_bool(a, u.arg);
                std::int64_t i = as_int(a, u.arg);
                if (i == std::numeric_limits<std::int64_t>::min()) throw EvalError("Overflow", "overflow in " + render(e));
                return -i;
            },
            [&](const Binary& b) -> Value {
                if (b.op == BinOp::And) return as_bool(eval(b.lhs, leaf), b.lhs) && as_bool(eval(b.rhs, leaf), b.rhs);
                if (b.op == BinOp::Or) return as_bool(eval(b.lhs, leaf), b.lhs) || as_bool(eval(b.rhs, leaf), b.rhs);
                Value l = eval(b.lhs, leaf);
                Value r = eval(b.rhs, leaf);
                if (b.op == BinOp::Eq || b.op == BinOp::Ne) {
                    if (l.index() != r.index()) throw EvalError("SortMismatch", "operands of " + render(e) + " differ in sort");
                    return (l == r) == (b.op == BinOp::Eq);
                }
                std::int64_t x = as_int(l, b.lhs);
                std::int64_t y = as_int(r, b.rhs);
                std::int64_t out = 0;
                auto overflow = [&] { throw EvalError("Overflow", "overflow in " + render(e)); };
                switch (b.op) {
                case BinOp::Add:
                    if (__builtin_add_overflow(x, y, &out)) overflow();
                    return out;
                case BinOp::Sub:
                    if (__builtin_sub_overflow(x, y, &out)) overflow();
                    return out;
                case BinOp::Mul:
                    if (__builtin_mul_overflow(x, y, &out)) overflow();
                    return out;
                case BinOp::Div:
                case BinOp::Mod:
                    if (y == 0) throw EvalError("DivisionByZero", "division by zero in " + render(e));
                    if (x == std::numeric_limits<std::int64_t>::min() && y == -1) overflow();
                    return b.op == BinOp::Div ? x / y : x % y;
                case BinOp::Lt:
                    return x < y;
                case BinOp::Le:
                    return x <= y;
                case BinOp::Gt:
                    return x > y;
                case BinOp::Ge:
                    return x >= y;
                default:
                    return false;
                }
            },
            [&](const auto&) -> Value { return leaf(e); },
        },
        e.node().v);
}

std::string fresh_name(const std::string& base, const std::set<std::string>& taken) {
    if (!taken.count(base)) return base;
    for (int k = 1;; ++k) {
        std::string n = base + "_" + std::to_string(k);
        if (!taken.count(n)) return n;
    }
}

Process normalize(const Process& p);

// Restricted names and parallel threads of a process, restrictions hoisted to the top.
struct Soup {
    std::vector<std::string> names;
    std::vector<Process> threads;
};

void flatten(const Process& p, Soup& s, std::set<std::string>& taken) {
    if (auto x = p.as<PPar>()) {
        flatten(x->left, s, taken);
        flatten(x->right, s, taken);
    } else if (auto x = p.as<PRestrict>()) {
        std::string name = x->session;
        Process body = x->body;
        if (taken.count(name)) {
            name = fresh_name(name, taken);
            body = rename_session(body, x->session, name);
        }
        taken.insert(name);
        s.names.push_back(name);
        flatten(body, s, taken);
    } else if (!p.is<PEnd>()) {
        s.threads.push_back(normalize(p));
    }
}

Process assemble(std::vector<std::string> names, std::vector<Process> threads) {
    std::vector<std::pair<std::string, Process>> keyed;
    for (auto& t : threads) keyed.emplace_back(render(t), t);
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::set<std::string> used;
    for (const auto& [k, t] : keyed) {
        auto fn = free_names(t);
        used.insert(fn.begin(), fn.end());
    }
    Process body = end_process();
    for (auto it = keyed.rbegin(); it != keyed.rend(); ++it)
        body = body.is<PEnd>() ? it->second : Process{PPar{it->second, body}};
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    for (auto it = names.rbegin(); it != names.rend(); ++it)
        if (used.count(*it)) body = PRestrict{*it, body};
    return body;
}

Process normalize(const Process& p) {
    return std::visit(overloaded{
                          [&](const PRequest& x) -> Process {
                              return PRequest{x.shared, x.roles, x.session, normalize(x.cont)};
                          },
                          [&](const PAccept& x) -> Process {
                              return PAccept{x.shared, x.role, x.session, normalize(x.cont)};
                          },
                          [&](const PSend& x) -> Process {
                              return PSend{x.session, x.from, x.to, x.label, x.args, normalize(x.cont)};
                          },
                          [&](const PRecv& x) -> Process {
                              PRecv out{x.session, x.self, x.from, {}};
                              for (const auto& b : x.branches) out.branches.push_back({b.label, b.binders, normalize(b.cont)});
                              return out;
                          },
                          [&](const PCond& x) -> Process {
                              return PCond{x.cond, normalize(x.then_branch), normalize(x.else_branch)};
                          },
                          [&](const PRec& x) -> Process { return PRec{x.var, normalize(x.body)}; },
                          [&](const PVar&) { return p; },
                          [&](const PEnd&) { return p; },
                          [&](const auto&) -> Process {
                              Soup s;
                              auto taken = free_names(p);
                              flatten(p, s, taken);
                              return assemble(s.names, s.threads);
                          },
                      },
                      p.node().v);
}

// Normalized soup whose threads do not start with `rec`.
Soup expand(const Process& p) {
    Process cur = struct_normalize(p);
    for (int round = 0; round < kUnfoldLimit; ++round) {
        Soup s;
        auto taken = free_names(cur);
        flatten(cur, s, taken);
        bool changed = false;
        for (auto& t : s.threads)
            if (auto r = t.as<PRec>()) {
                t = unfold(*r);
                changed = true;
            }
        if (!changed) return s;
        cur = struct_normalize(assemble(s.names, s.threads));
    }
    throw Error("UnguardedRecursion", "process recursion does not reach a prefix");
}

Value leaf_from(const Expr& e, const Vector* vec, const Valuation& v) {
    std::string name;
    if (auto x = e.as<VarRef>()) name = x->name;
    if (auto x = e.as<ParamRef>()) name = x->name;
    if (auto x = e.as<AVarRef>()) {
        if (vec) {
            auto it = vec->find(x->var);
            return it == vec->end() ? Value{std::int64_t{0}} : it->second;
        }
        name = render(x->var);
    }
    auto it = v.find(name);
    if (it == v.end()) throw EvalError("UnboundSymbol", "no value for '" + name + "'");
    return it->second;
}

Value eval_or_stuck(const Expr& e, const Vector* vec, const Valuation& v) {
    try {
        return eval(e, [&](const Expr& x) { return leaf_from(x, vec, v); });
    } catch (const EvalError& err) {
        throw StuckEvaluation(err.code(), err.what());
    }
}

struct Engine {
    const Valuation& params;
    const AnnotationInit* init = nullptr;

    struct Raw {
        std::vector<std::string> names;
        std::vector<Process> threads;
        Vector store;
        std::string rule;
        std::optional<CommInfo> comm;
        std::optional<LinkInfo> link;
    };

    std::vector<Raw> run(const Process& p, const Vector& store) {
        Soup s = expand(p);
        std::vector<Raw> out;
        auto base = [&](const std::string& rule) {
            Raw r{s.names, s.threads, store, rule, std::nullopt, std::nullopt};
            return r;
        };
        const Vector* vec = init ? &store : nullptr;
        std::set<std::string> taken(s.names.begin(), s.names.end());
        for (const auto& t : s.threads) {
            auto fn = free_names(t);
            taken.insert(fn.begin(), fn.end());
        }
        for (std::size_t i = 0; i < s.threads.size(); ++i) {
            const Process& t = s.threads[i];
            if (auto c = t.as<PCond>()) {
                bool v = std::get<bool>(check_bool(eval_or_stuck(c->cond, vec, params), c->cond));
                Raw r = base(v ? "IfT" : "IfF");
                r.threads[i] = v ? c->then_branch : c->else_branch;
                out.push_back(std::move(r));
            } else if (auto rq = t.as<PRequest>()) {
                link(s, i, *rq, taken, store, out);
            } else if (auto snd = t.as<PSend>()) {
                for (std::size_t j = 0; j < s.threads.size(); ++j) {
                    auto rcv = s.threads[j].as<PRecv>();
                    if (j == i || !rcv || rcv->session != snd->session || rcv->self != snd->to || rcv->from != snd->from)
                        continue;
                    auto br = std::find_if(rcv->branches.begin(), rcv->branches.end(),
                                           [&](const PBranch& b) { return b.label == snd->label; });
                    if (br == rcv->branches.end() || br->binders.size() != snd->args.size()) continue;
                    std::vector<Value> vals;
                    for (const auto& a : snd->args) vals.push_back(eval_or_stuck(a, vec, params));
                    Raw r = base("Com");
                    std::map<std::string, Expr> sub;
                    for (std::size_t k = 0; k < vals.size(); ++k) {
                        if (init) {
                            AnnotatedVar av{br->binders[k], snd->session, snd->to};
                            sub.insert_or_assign(br->binders[k], avar_ref(av));
                            r.store[av] = vals[k];
                        } else {
                            sub.insert_or_assign(br->binders[k], value_expr(vals[k]));
                        }
                    }
                    r.threads[i] = snd->cont;
                    r.threads[j] = substitute(br->cont, sub);
                    r.comm = CommInfo{snd->session, snd->from, snd->to, snd->label, vals};
                    out.push_back(std::move(r));
                }
            }
        }
        return out;
    }

    static Value check_bool(const Value& v, const Expr& e) {
        if (!std::holds_alternative<bool>(v))
            throw StuckEvaluation("SortMismatch", "condition " + render(e) + " is not a Bool");
        return v;
    }

    void link(const Soup& s, std::size_t i, const PRequest& rq, const std::set<std::string>& taken,
              const Vector& store, std::vector<Raw>& out) {
        std::vector<std::vector<std::size_t>> cands;
        for (std::uint32_t r = 2; r <= rq.roles; ++r) {
            std::vector<std::size_t> c;
            for (std::size_t j = 0; j < s.threads.size(); ++j)
                if (auto a = s.threads[j].as<PAccept>(); a && j != i && a->shared == rq.shared && a->role.id == r)
                    c.push_back(j);
            if (c.empty()) return;
            cands.push_back(std::move(c));
        }
        std::string fresh = fresh_name(rq.session, taken);
        std::vector<std::size_t> pick(cands.size(), 0);
        while (true) {
            Raw r{s.names, s.threads, store, "Link", std::nullopt, LinkInfo{rq.shared, fresh}};
            r.names.push_back(fresh);
            auto join = [&](std::size_t idx, const std::string& bound, Role role, const Process& cont) {
                Process q = rename_session(cont, bound, fresh);
                if (init) {
                    Actor a{fresh, role};
                    auto sorts = infer_sorts(q);
                    for (const auto& x : free_vars(q)) {
                        AnnotatedVar av{x, fresh, role};
                        auto it = sorts.find(x);
                        r.store[av] = initial_value(av, it == sorts.end() ? Sort::Int : it->second, *init);
                    }
                    q = annotate_actor(q, a);
                }
                r.threads[idx] = q;
            };
            join(i, rq.session, Role{1}, rq.cont);
            for (std::size_t k = 0; k < cands.size(); ++k) {
                const auto& acc = *s.threads[cands[k][pick[k]]].as<PAccept>();
                join(cands[k][pick[k]], acc.session, acc.role, acc.cont);
            }
            out.push_back(std::move(r));
            std::size_t k = 0;
            while (k < pick.size() && ++pick[k] == cands[k].size()) pick[k++] = 0;
            if (k == pick.size()) break;
        }
    }
};

void sgp_steps(const Sgp& s, const Vector& vec, const Valuation& params, const std::function<Sgp(Sgp)>& ctx,
               std::vector<SgpSuccessor>& out) {
    Sgp h = sgp_head(s);
    if (auto a = h.as<SAssign>()) {
        std::vector<Value> vals;
        for (const auto& e : a->values) vals.push_back(eval_or_stuck(e, &vec, params));
        SgpSuccessor n{{vec, ctx(a->cont)}, "Ass", a->origin, a->targets};
        for (std::size_t i = 0; i < vals.size(); ++i) n.state.vars[a->targets[i]] = vals[i];
        out.push_back(std::move(n));
    } else if (auto c = h.as<SIf>()) {
        Value v = eval_or_stuck(c->cond, &vec, params);
        if (!std::holds_alternative<bool>(v))
            throw StuckEvaluation("SortMismatch", "condition " + render(c->cond) + " is not a Bool");
        bool b = std::get<bool>(v);
        out.push_back({{vec, ctx(b ? c->then_branch : c->else_branch)}, b ? "IfT" : "IfF", std::nullopt, {}});
    } else if (auto p = h.as<SPar>()) {
        Sgp l = p->left, r = p->right;
        auto join = [](const Sgp& a, const Sgp& b) -> Sgp {
            Sgp ha = sgp_head(a), hb = sgp_head(b);
            if (ha.is<SEnd>()) return hb;
            if (hb.is<SEnd>()) return ha;
            return SPar{a, b};
        };
        sgp_steps(l, vec, params, [&](Sgp x) { return ctx(join(x, r)); }, out);
        sgp_steps(r, vec, params, [&](Sgp x) { return ctx(join(l, x)); }, out);
    }
}

bool equiv_rec(const Sgp& x, const Sgp& y, std::set<std::pair<std::string, std::string>>& assumed) {
    Sgp a = sgp_head(x);
    Sgp b = sgp_head(y);
    if (a.is<SEnd>() || b.is<SEnd>()) return a.is<SEnd>() && b.is<SEnd>();
    if (auto va = a.as<SVar>()) {
        auto vb = b.as<SVar>();
        return vb && va->var == vb->var;
    }
    if (!assumed.insert({render(a), render(b)}).second) return true;
    if (auto sa = a.as<SAssign>()) {
        auto sb = b.as<SAssign>();
        return sb && sa->targets == sb->targets && sa->values == sb->values && equiv_rec(sa->cont, sb->cont, assumed);
    }
    if (auto ia = a.as<SIf>()) {
        auto ib = b.as<SIf>();
        return ib && ia->cond == ib->cond && equiv_rec(ia->then_branch, ib->then_branch, assumed) &&
               equiv_rec(ia->else_branch, ib->else_branch, assumed);
    }
    auto pa = a.as<SPar>();
    auto pb = b.as<SPar>();
    if (!pa || !pb) return false;
    auto saved = assumed;
    if (equiv_rec(pa->left, pb->left, assumed) && equiv_rec(pa->right, pb->right, assumed)) return true;
    assumed = saved;
    return equiv_rec(pa->left, pb->right, assumed) && equiv_rec(pa->right, pb->left, assumed);
}

} // namespace

Value eval_expr(const Expr& e, const Valuation& v) {
    return eval(e, [&](const Expr& x) { return leaf_from(x, nullptr, v); });
}

Value eval_expr(const Expr& e, const Vector& vec, const Valuation& params) {
    return eval(e, [&](const Expr& x) { return leaf_from(x, &vec, params); });
}

Process struct_normalize(const Process& p) { return normalize(p); }

std::vector<ProcessSuccessor> step_process(const Process& p, const Valuation& v) {
    Engine eng{v};
    std::vector<ProcessSuccessor> out;
    std::set<std::string> seen;
    for (auto& r : eng.run(p, {})) {
        Process t = struct_normalize(assemble(r.names, r.threads));
        if (seen.insert(render(t)).second) out.push_back({t, r.rule, r.comm, r.link});
    }
    return out;
}

std::vector<AnnotatedSuccessor> step_annotated(const AnnotatedState& s, const Valuation& params,
                                               const AnnotationInit& init) {
    Engine eng{params, &init};
    std::vector<AnnotatedSuccessor> out;
    std::set<std::string> seen;
    for (auto& r : eng.run(s.process, s.store)) {
        AnnotatedState n{struct_normalize(assemble(r.names, r.threads)), r.store};
        if (seen.insert(state_key(n)).second) out.push_back({n, r.rule, r.comm, r.link});
    }
    return out;
}

Process annotate_actor(const Process& p, const Actor& a) {
    std::map<std::string, Expr> sub;
    for (const auto& x : free_vars(p)) sub.insert_or_assign(x, avar_ref({x, a.session, a.role}));
    return sub.empty() ? p : substitute(p, sub);
}

Value initial_value(const AnnotatedVar& v, Sort sort, const AnnotationInit& init) {
    if (auto it = init.vars.find(v); it != init.vars.end()) return it->second;
    if (auto it = init.values.find(v.base); it != init.values.end()) return it->second;
    return sort == Sort::Bool ? Value{false} : Value{std::int64_t{0}};
}

std::string state_key(const AnnotatedState& s) { return render(s.process) + " @ " + render(s.store); }

std::vector<GlobalSuccessor> step_global(const GlobalType& g) {
    std::vector<GlobalSuccessor> out;
    GlobalType h = unfold_head(g);
    if (auto c = h.as<GComm>()) {
        for (const auto& b : c->branches) out.push_back({b.cont, c->from, c->to, b.label});
    } else if (auto p = h.as<GPar>()) {
        auto join = [](const GlobalType& l, const GlobalType& r) -> GlobalType {
            if (is_terminated(l)) return r;
            if (is_terminated(r)) return l;
            return GPar{l, r};
        };
        for (auto& s : step_global(p->left)) out.push_back({join(s.type, p->right), s.from, s.to, s.label});
        for (auto& s : step_global(p->right)) out.push_back({join(p->left, s.type), s.from, s.to, s.label});
    }
    std::vector<GlobalSuccessor> dedup;
    std::set<std::string> seen;
    for (auto& s : out)
        if (seen.insert(render(s.type) + "|" + std::to_string(s.from.id) + ">" + std::to_string(s.to.id) + ":" + s.label)
                .second)
            dedup.push_back(std::move(s));
    return dedup;
}

Sgp sgp_head(const Sgp& s) {
    Sgp h = unfold_head(s);
    if (auto p = h.as<SPar>()) {
        Sgp l = sgp_head(p->left);
        Sgp r = sgp_head(p->right);
        if (l.is<SEnd>()) return r;
        if (r.is<SEnd>()) return l;
        return SPar{l, r};
    }
    return h;
}

std::vector<SgpSuccessor> step_sgp(const SgpSystem& sys, const Valuation& params) {
    std::vector<SgpSuccessor> out;
    sgp_steps(sys.program, sys.vars, params, [](Sgp x) { return x; }, out);
    return out;
}

bool sgp_equiv(const Sgp& a, const Sgp& b) {
    std::set<std::pair<std::string, std::string>> assumed;
    return equiv_rec(a, b, assumed);
}

bool sgp_equiv(const SgpSystem& a, const SgpSystem& b) { return a.vars == b.vars && sgp_equiv(a.program, b.program); }

} // namespace mpst
