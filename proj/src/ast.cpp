#include "mpst/ast.hpp"

#include <algorithm>
#include <utility>

#include "visit.hpp"

namespace mpst {

using detail::overloaded;

namespace {

using Scope = std::vector<std::pair<std::string, std::string>>;

// Two bound variables correspond if they were introduced at the same binder depth.
bool same_var(const Scope& scope, const std::string& a, const std::string& b) {
    for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
        if (it->first == a || it->second == b) return it->first == a && it->second == b;
    }
    return a == b;
}

} // namespace

Sort sort_of(const Value& v) { return std::holds_alternative<bool>(v) ? Sort::Bool : Sort::Int; }

std::string to_string(Sort s) { return s == Sort::Int ? "Int" : "Bool"; }

std::string to_string(const Value& v) {
    if (auto b = std::get_if<bool>(&v)) return *b ? "true" : "false";
    return std::to_string(std::get<std::int64_t>(v));
}

// ------------------------------------------------------------------ equality

bool operator==(const Expr& a, const Expr& b) {
    return a.identity() == b.identity() || a.node().v == b.node().v;
}

bool operator==(const GlobalType& a, const GlobalType& b) {
    return a.identity() == b.identity() || a.node().v == b.node().v;
}

bool operator==(const LocalType& a, const LocalType& b) {
    return a.identity() == b.identity() || a.node().v == b.node().v;
}

bool operator==(const Process& a, const Process& b) {
    return a.identity() == b.identity() || a.node().v == b.node().v;
}

namespace {

bool sgp_equal(const Sgp& a, const Sgp& b, Scope& scope) {
    if (a.node().v.index() != b.node().v.index()) return false;
    return std::visit(
        overloaded{
            [&](const SAssign& x) {
                const auto& y = *b.as<SAssign>();
                return x.targets == y.targets && x.values == y.values &&
                       sgp_equal(x.cont, y.cont, scope);
            },
            [&](const SIf& x) {
                const auto& y = *b.as<SIf>();
                return x.cond == y.cond && sgp_equal(x.then_branch, y.then_branch, scope) &&
                       sgp_equal(x.else_branch, y.else_branch, scope);
            },
            [&](const SPar& x) {
                const auto& y = *b.as<SPar>();
                return sgp_equal(x.left, y.left, scope) && sgp_equal(x.right, y.right, scope);
            },
            [&](const SRec& x) {
                const auto& y = *b.as<SRec>();
                scope.emplace_back(x.var, y.var);
                bool r = sgp_equal(x.body, y.body, scope);
                scope.pop_back();
                return r;
            },
            [&](const SVar& x) { return same_var(scope, x.var, b.as<SVar>()->var); },
            [&](const SEnd&) { return true; },
        },
        a.node().v);
}

bool local_alpha(const LocalType& a, const LocalType& b, Scope& scope) {
    if (a.node().v.index() != b.node().v.index()) return false;
    auto branches = [&](const std::vector<LBranch>& x, const std::vector<LBranch>& y) {
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i].label != y[i].label || x[i].sorts != y[i].sorts) return false;
            if (!local_alpha(x[i].cont, y[i].cont, scope)) return false;
        }
        return true;
    };
    return std::visit(
        overloaded{
            [&](const LSend& x) {
                const auto& y = *b.as<LSend>();
                return x.peer == y.peer && branches(x.branches, y.branches);
            },
            [&](const LRecv& x) {
                const auto& y = *b.as<LRecv>();
                return x.peer == y.peer && branches(x.branches, y.branches);
            },
            [&](const LRec& x) {
                scope.emplace_back(x.var, b.as<LRec>()->var);
                bool r = local_alpha(x.body, b.as<LRec>()->body, scope);
                scope.pop_back();
                return r;
            },
            [&](const LVar& x) { return same_var(scope, x.var, b.as<LVar>()->var); },
            [&](const LEnd&) { return true; },
        },
        a.node().v);
}

} // namespace

bool operator==(const Sgp& a, const Sgp& b) {
    if (a.identity() == b.identity()) return true;
    Scope scope;
    return sgp_equal(a, b, scope);
}

bool alpha_equal(const LocalType& a, const LocalType& b) {
    if (a.identity() == b.identity()) return true;
    Scope scope;
    return local_alpha(a, b, scope);
}

// -------------------------------------------------------------- constructors

Expr int_lit(std::int64_t v) { return IntLit{v}; }
Expr bool_lit(bool v) { return BoolLit{v}; }
Expr var_ref(std::string name) { return VarRef{std::move(name)}; }
Expr param_ref(std::string name) { return ParamRef{std::move(name)}; }
Expr avar_ref(AnnotatedVar v) { return AVarRef{std::move(v)}; }
Expr binary(BinOp op, Expr l, Expr r) { return Binary{op, std::move(l), std::move(r)}; }

Expr value_expr(const Value& v) {
    if (auto b = std::get_if<bool>(&v)) return bool_lit(*b);
    return int_lit(std::get<std::int64_t>(v));
}

Process end_process() {
    static const Process e = PEnd{};
    return e;
}
Sgp end_sgp() {
    static const Sgp e = SEnd{};
    return e;
}
Sgp tau(Sgp cont, std::optional<Provenance> origin) {
    return SAssign{{}, {}, std::move(cont), std::move(origin)};
}
GlobalType end_global() {
    static const GlobalType e = GEnd{};
    return e;
}
LocalType end_local() {
    static const LocalType e = LEnd{};
    return e;
}

// ------------------------------------------------------------------- queries

namespace {

void collect_roles(const GlobalType& g, std::set<Role>& out) {
    std::visit(overloaded{
                   [&](const GComm& c) {
                       out.insert(c.from);
                       out.insert(c.to);
                       for (const auto& b : c.branches) collect_roles(b.cont, out);
                   },
                   [&](const GPar& p) {
                       collect_roles(p.left, out);
                       collect_roles(p.right, out);
                   },
                   [&](const GRec& r) { collect_roles(r.body, out); },
                   [](const auto&) {},
               },
               g.node().v);
}

void collect_roles(const LocalType& l, std::set<Role>& out) {
    std::visit(overloaded{
                   [&](const LSend& c) {
                       out.insert(c.peer);
                       for (const auto& b : c.branches) collect_roles(b.cont, out);
                   },
                   [&](const LRecv& c) {
                       out.insert(c.peer);
                       for (const auto& b : c.branches) collect_roles(b.cont, out);
                   },
                   [&](const LRec& r) { collect_roles(r.body, out); },
                   [](const auto&) {},
               },
               l.node().v);
}

// Visits every process node in pre-order.
template <class F>
void walk(const Process& p, F&& f) {
    f(p);
    std::visit(overloaded{
                   [&](const PRequest& x) { walk(x.cont, f); },
                   [&](const PAccept& x) { walk(x.cont, f); },
                   [&](const PSend& x) { walk(x.cont, f); },
                   [&](const PRecv& x) {
                       for (const auto& b : x.branches) walk(b.cont, f);
                   },
                   [&](const PCond& x) {
                       walk(x.then_branch, f);
                       walk(x.else_branch, f);
                   },
                   [&](const PPar& x) {
                       walk(x.left, f);
                       walk(x.right, f);
                   },
                   [&](const PRestrict& x) { walk(x.body, f); },
                   [&](const PRec& x) { walk(x.body, f); },
                   [](const auto&) {},
               },
               p.node().v);
}

template <class F>
void walk(const Expr& e, F&& f) {
    f(e);
    if (auto u = e.as<Unary>()) walk(u->arg, f);
    if (auto b = e.as<Binary>()) {
        walk(b->lhs, f);
        walk(b->rhs, f);
    }
}

template <class F>
void walk(const Sgp& s, F&& f) {
    f(s);
    std::visit(overloaded{
                   [&](const SAssign& x) { walk(x.cont, f); },
                   [&](const SIf& x) {
                       walk(x.then_branch, f);
                       walk(x.else_branch, f);
                   },
                   [&](const SPar& x) {
                       walk(x.left, f);
                       walk(x.right, f);
                   },
                   [&](const SRec& x) { walk(x.body, f); },
                   [](const auto&) {},
               },
               s.node().v);
}

// Calls f on every expression that appears directly in a process node.
template <class F>
void process_exprs(const Process& p, F&& f) {
    walk(p, [&](const Process& q) {
        if (auto s = q.as<PSend>())
            for (const auto& a : s->args) f(a);
        if (auto c = q.as<PCond>()) f(c->cond);
    });
}

template <class F>
void sgp_exprs(const Sgp& s, F&& f) {
    walk(s, [&](const Sgp& q) {
        if (auto a = q.as<SAssign>())
            for (const auto& v : a->values) f(v);
        if (auto c = q.as<SIf>()) f(c->cond);
    });
}

std::size_t branches_size(const auto& branches) {
    std::size_t n = 0;
    for (const auto& b : branches) n += 1 + size(b.cont);
    return n;
}

} // namespace

std::set<Role> roles(const GlobalType& g) {
    std::set<Role> out;
    collect_roles(g, out);
    return out;
}

std::set<Role> roles(const LocalType& l) {
    std::set<Role> out;
    collect_roles(l, out);
    return out;
}

std::set<Role> roles(const Process& p) {
    std::set<Role> out;
    walk(p, [&](const Process& q) {
        if (auto r = q.as<PRequest>()) {
            for (std::uint32_t i = 1; i <= r->roles; ++i) out.insert(Role{i});
        } else if (auto a = q.as<PAccept>()) {
            out.insert(a->role);
        } else if (auto s = q.as<PSend>()) {
            out.insert(s->from);
            out.insert(s->to);
        } else if (auto v = q.as<PRecv>()) {
            out.insert(v->self);
            out.insert(v->from);
        }
    });
    return out;
}

std::size_t size(const Expr& e) {
    std::size_t n = 0;
    walk(e, [&](const Expr&) { ++n; });
    return n;
}

std::size_t size(const GlobalType& g) {
    return std::visit(overloaded{
                          [](const GComm& c) { return 1 + branches_size(c.branches); },
                          [](const GPar& p) { return 1 + size(p.left) + size(p.right); },
                          [](const GRec& r) { return 1 + size(r.body); },
                          [](const auto&) -> std::size_t { return 1; },
                      },
                      g.node().v);
}

std::size_t size(const LocalType& l) {
    return std::visit(overloaded{
                          [](const LSend& c) { return 1 + branches_size(c.branches); },
                          [](const LRecv& c) { return 1 + branches_size(c.branches); },
                          [](const LRec& r) { return 1 + size(r.body); },
                          [](const auto&) -> std::size_t { return 1; },
                      },
                      l.node().v);
}

std::size_t size(const Process& p) {
    std::size_t n = 0;
    walk(p, [&](const Process& q) {
        ++n;
        if (auto r = q.as<PRecv>()) n += r->branches.size();
    });
    process_exprs(p, [&](const Expr& e) { n += size(e); });
    return n;
}

std::size_t size(const Sgp& s) {
    std::size_t n = 0;
    walk(s, [&](const Sgp&) { ++n; });
    sgp_exprs(s, [&](const Expr& e) { n += size(e); });
    return n;
}

std::set<std::string> free_vars(const Expr& e) {
    std::set<std::string> out;
    walk(e, [&](const Expr& x) {
        if (auto v = x.as<VarRef>()) out.insert(v->name);
    });
    return out;
}

std::set<std::string> params(const Expr& e) {
    std::set<std::string> out;
    walk(e, [&](const Expr& x) {
        if (auto v = x.as<ParamRef>()) out.insert(v->name);
    });
    return out;
}

std::set<AnnotatedVar> annotated_vars(const Expr& e) {
    std::set<AnnotatedVar> out;
    walk(e, [&](const Expr& x) {
        if (auto v = x.as<AVarRef>()) out.insert(v->var);
    });
    return out;
}

std::set<AnnotatedVar> annotated_vars(const Sgp& s) {
    std::set<AnnotatedVar> out;
    walk(s, [&](const Sgp& q) {
        if (auto a = q.as<SAssign>()) out.insert(a->targets.begin(), a->targets.end());
    });
    sgp_exprs(s, [&](const Expr& e) {
        auto vs = annotated_vars(e);
        out.insert(vs.begin(), vs.end());
    });
    return out;
}

namespace {

void free_names_into(const Process& p, std::set<std::string>& out, bool vars_only) {
    auto exprs = [&](const Expr& e) {
        for (auto& v : free_vars(e)) out.insert(v);
    };
    auto without = [&](const Process& q, const std::vector<std::string>& bound) {
        std::set<std::string> inner;
        free_names_into(q, inner, vars_only);
        for (const auto& b : bound) inner.erase(b);
        out.insert(inner.begin(), inner.end());
    };
    std::visit(overloaded{
                   [&](const PRequest& x) {
                       if (!vars_only) out.insert(x.shared);
                       without(x.cont, vars_only ? std::vector<std::string>{}
                                                 : std::vector<std::string>{x.session});
                   },
                   [&](const PAccept& x) {
                       if (!vars_only) out.insert(x.shared);
                       without(x.cont, vars_only ? std::vector<std::string>{}
                                                 : std::vector<std::string>{x.session});
                   },
                   [&](const PSend& x) {
                       if (!vars_only) out.insert(x.session);
                       for (const auto& a : x.args) exprs(a);
                       free_names_into(x.cont, out, vars_only);
                   },
                   [&](const PRecv& x) {
                       if (!vars_only) out.insert(x.session);
                       for (const auto& b : x.branches) without(b.cont, b.binders);
                   },
                   [&](const PCond& x) {
                       exprs(x.cond);
                       free_names_into(x.then_branch, out, vars_only);
                       free_names_into(x.else_branch, out, vars_only);
                   },
                   [&](const PPar& x) {
                       free_names_into(x.left, out, vars_only);
                       free_names_into(x.right, out, vars_only);
                   },
                   [&](const PRestrict& x) {
                       without(x.body, vars_only ? std::vector<std::string>{}
                                                 : std::vector<std::string>{x.session});
                   },
                   [&](const PRec& x) { free_names_into(x.body, out, vars_only); },
                   [](const auto&) {},
               },
               p.node().v);
}

} // namespace

std::set<std::string> free_names(const Process& p) {
    std::set<std::string> out;
    free_names_into(p, out, false);
    return out;
}

std::set<std::string> free_vars(const Process& p) {
    std::set<std::string> out;
    free_names_into(p, out, true);
    return out;
}

std::set<std::string> params(const Process& p) {
    std::set<std::string> out;
    process_exprs(p, [&](const Expr& e) {
        auto ps = params(e);
        out.insert(ps.begin(), ps.end());
    });
    return out;
}

std::set<std::string> params(const Sgp& s) {
    std::set<std::string> out;
    sgp_exprs(s, [&](const Expr& e) {
        auto ps = params(e);
        out.insert(ps.begin(), ps.end());
    });
    return out;
}

std::set<std::string> free_pvars(const Process& p) {
    std::set<std::string> out;
    std::visit(overloaded{
                   [&](const PVar& v) { out.insert(v.var); },
                   [&](const PRec& r) {
                       out = free_pvars(r.body);
                       out.erase(r.var);
                   },
                   [&](const auto&) {
                       // Every non-binding node: union over children.
                       std::visit(overloaded{
                                      [&](const PRequest& x) { out = free_pvars(x.cont); },
                                      [&](const PAccept& x) { out = free_pvars(x.cont); },
                                      [&](const PSend& x) { out = free_pvars(x.cont); },
                                      [&](const PRecv& x) {
                                          for (const auto& b : x.branches) {
                                              auto s = free_pvars(b.cont);
                                              out.insert(s.begin(), s.end());
                                          }
                                      },
                                      [&](const PCond& x) {
                                          out = free_pvars(x.then_branch);
                                          auto s = free_pvars(x.else_branch);
                                          out.insert(s.begin(), s.end());
                                      },
                                      [&](const PPar& x) {
                                          out = free_pvars(x.left);
                                          auto s = free_pvars(x.right);
                                          out.insert(s.begin(), s.end());
                                      },
                                      [&](const PRestrict& x) { out = free_pvars(x.body); },
                                      [](const auto&) {},
                                  },
                                  p.node().v);
                   },
               },
               p.node().v);
    return out;
}

std::set<Actor> actors(const Process& p) {
    std::set<Actor> out;
    walk(p, [&](const Process& q) {
        if (auto r = q.as<PRequest>()) out.insert({r->session, Role{1}});
        if (auto a = q.as<PAccept>()) out.insert({a->session, a->role});
        if (auto s = q.as<PSend>()) out.insert({s->session, s->from});
        if (auto v = q.as<PRecv>()) out.insert({v->session, v->self});
    });
    return out;
}

std::set<std::string> sessions_used(const Process& p) {
    std::set<std::string> out;
    for (const auto& a : actors(p)) out.insert(a.session);
    return out;
}

std::set<std::string> free_type_vars(const GlobalType& g) {
    return std::visit(overloaded{
                          [](const GComm& c) {
                              std::set<std::string> out;
                              for (const auto& b : c.branches) {
                                  auto s = free_type_vars(b.cont);
                                  out.insert(s.begin(), s.end());
                              }
                              return out;
                          },
                          [](const GPar& p) {
                              auto out = free_type_vars(p.left);
                              auto s = free_type_vars(p.right);
                              out.insert(s.begin(), s.end());
                              return out;
                          },
                          [](const GRec& r) {
                              auto out = free_type_vars(r.body);
                              out.erase(r.var);
                              return out;
                          },
                          [](const GVar& v) { return std::set<std::string>{v.var}; },
                          [](const GEnd&) { return std::set<std::string>{}; },
                      },
                      g.node().v);
}

std::set<std::string> free_type_vars(const LocalType& l) {
    auto branches = [](const std::vector<LBranch>& bs) {
        std::set<std::string> out;
        for (const auto& b : bs) {
            auto s = free_type_vars(b.cont);
            out.insert(s.begin(), s.end());
        }
        return out;
    };
    return std::visit(overloaded{
                          [&](const LSend& c) { return branches(c.branches); },
                          [&](const LRecv& c) { return branches(c.branches); },
                          [](const LRec& r) {
                              auto out = free_type_vars(r.body);
                              out.erase(r.var);
                              return out;
                          },
                          [](const LVar& v) { return std::set<std::string>{v.var}; },
                          [](const LEnd&) { return std::set<std::string>{}; },
                      },
                      l.node().v);
}

std::set<std::string> free_svars(const Sgp& s) {
    return std::visit(overloaded{
                          [](const SAssign& a) { return free_svars(a.cont); },
                          [](const SIf& c) {
                              auto out = free_svars(c.then_branch);
                              auto e = free_svars(c.else_branch);
                              out.insert(e.begin(), e.end());
                              return out;
                          },
                          [](const SPar& p) {
                              auto out = free_svars(p.left);
                              auto e = free_svars(p.right);
                              out.insert(e.begin(), e.end());
                              return out;
                          },
                          [](const SRec& r) {
                              auto out = free_svars(r.body);
                              out.erase(r.var);
                              return out;
                          },
                          [](const SVar& v) { return std::set<std::string>{v.var}; },
                          [](const SEnd&) { return std::set<std::string>{}; },
                      },
                      s.node().v);
}

bool is_terminated(const GlobalType& g) {
    if (g.is<GEnd>()) return true;
    if (auto p = g.as<GPar>()) return is_terminated(p->left) && is_terminated(p->right);
    return false;
}

// ------------------------------------------------------------- substitutions

Expr substitute(const Expr& e, const std::map<std::string, Expr>& vars) {
    if (vars.empty()) return e;
    return std::visit(overloaded{
                          [&](const VarRef& v) -> Expr {
                              auto it = vars.find(v.name);
                              return it == vars.end() ? e : it->second;
                          },
                          [&](const Unary& u) -> Expr {
                              return Unary{u.op, substitute(u.arg, vars)};
                          },
                          [&](const Binary& b) -> Expr {
                              return Binary{b.op, substitute(b.lhs, vars), substitute(b.rhs, vars)};
                          },
                          [&](const auto&) { return e; },
                      },
                      e.node().v);
}

Process substitute(const Process& p, const std::map<std::string, Expr>& vars) {
    if (vars.empty()) return p;
    auto sub = [&](const Process& q) { return substitute(q, vars); };
    return std::visit(
        overloaded{
            [&](const PRequest& x) -> Process {
                return PRequest{x.shared, x.roles, x.session, sub(x.cont)};
            },
            [&](const PAccept& x) -> Process {
                return PAccept{x.shared, x.role, x.session, sub(x.cont)};
            },
            [&](const PSend& x) -> Process {
                std::vector<Expr> args;
                for (const auto& a : x.args) args.push_back(substitute(a, vars));
                return PSend{x.session, x.from, x.to, x.label, std::move(args), sub(x.cont)};
            },
            [&](const PRecv& x) -> Process {
                std::vector<PBranch> bs;
                for (const auto& b : x.branches) {
                    auto inner = vars;
                    for (const auto& n : b.binders) inner.erase(n);
                    if (!inner.empty()) {
                        auto fv = free_vars(b.cont);
                        for (const auto& [k, v] : inner) {
                            if (!fv.count(k)) continue;
                            for (const auto& n : b.binders)
                                if (free_vars(v).count(n)) throw CaptureError(n);
                        }
                    }
                    bs.push_back({b.label, b.binders, substitute(b.cont, inner)});
                }
                return PRecv{x.session, x.self, x.from, std::move(bs)};
            },
            [&](const PCond& x) -> Process {
                return PCond{substitute(x.cond, vars), sub(x.then_branch), sub(x.else_branch)};
            },
            [&](const PPar& x) -> Process { return PPar{sub(x.left), sub(x.right)}; },
            [&](const PRestrict& x) -> Process { return PRestrict{x.session, sub(x.body)}; },
            [&](const PRec& x) -> Process { return PRec{x.var, sub(x.body)}; },
            [&](const auto&) { return p; },
        },
        p.node().v);
}

Process substitute_pvar(const Process& p, const std::string& var, const Process& by) {
    auto sub = [&](const Process& q) { return substitute_pvar(q, var, by); };
    return std::visit(
        overloaded{
            [&](const PRequest& x) -> Process {
                return PRequest{x.shared, x.roles, x.session, sub(x.cont)};
            },
            [&](const PAccept& x) -> Process {
                return PAccept{x.shared, x.role, x.session, sub(x.cont)};
            },
            [&](const PSend& x) -> Process {
                return PSend{x.session, x.from, x.to, x.label, x.args, sub(x.cont)};
            },
            [&](const PRecv& x) -> Process {
                std::vector<PBranch> bs;
                for (const auto& b : x.branches) bs.push_back({b.label, b.binders, sub(b.cont)});
                return PRecv{x.session, x.self, x.from, std::move(bs)};
            },
            [&](const PCond& x) -> Process {
                return PCond{x.cond, sub(x.then_branch), sub(x.else_branch)};
            },
            [&](const PPar& x) -> Process { return PPar{sub(x.left), sub(x.right)}; },
            [&](const PRestrict& x) -> Process { return PRestrict{x.session, sub(x.body)}; },
            [&](const PRec& x) -> Process {
                if (x.var == var) return p;
                return PRec{x.var, sub(x.body)};
            },
            [&](const PVar& x) -> Process { return x.var == var ? by : p; },
            [&](const PEnd&) { return p; },
        },
        p.node().v);
}

Process rename_session(const Process& p, const std::string& from, const std::string& to) {
    if (from == to) return p;
    auto sub = [&](const Process& q) { return rename_session(q, from, to); };
    auto name = [&](const std::string& s) { return s == from ? to : s; };
    return std::visit(
        overloaded{
            [&](const PRequest& x) -> Process {
                if (x.session == from) return p;
                return PRequest{x.shared, x.roles, x.session, sub(x.cont)};
            },
            [&](const PAccept& x) -> Process {
                if (x.session == from) return p;
                return PAccept{x.shared, x.role, x.session, sub(x.cont)};
            },
            [&](const PSend& x) -> Process {
                return PSend{name(x.session), x.from, x.to, x.label, x.args, sub(x.cont)};
            },
            [&](const PRecv& x) -> Process {
                std::vector<PBranch> bs;
                for (const auto& b : x.branches) bs.push_back({b.label, b.binders, sub(b.cont)});
                return PRecv{name(x.session), x.self, x.from, std::move(bs)};
            },
            [&](const PCond& x) -> Process {
                return PCond{x.cond, sub(x.then_branch), sub(x.else_branch)};
            },
            [&](const PPar& x) -> Process { return PPar{sub(x.left), sub(x.right)}; },
            [&](const PRestrict& x) -> Process {
                if (x.session == from) return p;
                return PRestrict{x.session, sub(x.body)};
            },
            [&](const PRec& x) -> Process { return PRec{x.var, sub(x.body)}; },
            [&](const auto&) { return p; },
        },
        p.node().v);
}

Process unfold(const PRec& r) { return substitute_pvar(r.body, r.var, PRec{r.var, r.body}); }

GlobalType substitute_tvar(const GlobalType& g, const std::string& var, const GlobalType& by) {
    return std::visit(overloaded{
                          [&](const GComm& c) -> GlobalType {
                              GComm out{c.from, c.to, {}};
                              for (const auto& b : c.branches)
                                  out.branches.push_back(
                                      {b.label, b.sorts, substitute_tvar(b.cont, var, by)});
                              return out;
                          },
                          [&](const GPar& p) -> GlobalType {
                              return GPar{substitute_tvar(p.left, var, by),
                                          substitute_tvar(p.right, var, by)};
                          },
                          [&](const GRec& r) -> GlobalType {
                              if (r.var == var) return g;
                              return GRec{r.var, substitute_tvar(r.body, var, by)};
                          },
                          [&](const GVar& v) -> GlobalType { return v.var == var ? by : g; },
                          [&](const GEnd&) { return g; },
                      },
                      g.node().v);
}

LocalType substitute_tvar(const LocalType& l, const std::string& var, const LocalType& by) {
    auto branches = [&](const std::vector<LBranch>& bs) {
        std::vector<LBranch> out;
        for (const auto& b : bs) out.push_back({b.label, b.sorts, substitute_tvar(b.cont, var, by)});
        return out;
    };
    return std::visit(overloaded{
                          [&](const LSend& c) -> LocalType {
                              return LSend{c.peer, branches(c.branches)};
                          },
                          [&](const LRecv& c) -> LocalType {
                              return LRecv{c.peer, branches(c.branches)};
                          },
                          [&](const LRec& r) -> LocalType {
                              if (r.var == var) return l;
                              return LRec{r.var, substitute_tvar(r.body, var, by)};
                          },
                          [&](const LVar& v) -> LocalType { return v.var == var ? by : l; },
                          [&](const LEnd&) { return l; },
                      },
                      l.node().v);
}

Sgp substitute_svar(const Sgp& s, const std::string& var, const Sgp& by) {
    auto sub = [&](const Sgp& q) { return substitute_svar(q, var, by); };
    return std::visit(overloaded{
                          [&](const SAssign& a) -> Sgp {
                              return SAssign{a.targets, a.values, sub(a.cont), a.origin};
                          },
                          [&](const SIf& c) -> Sgp {
                              return SIf{c.cond, sub(c.then_branch), sub(c.else_branch)};
                          },
                          [&](const SPar& p) -> Sgp { return SPar{sub(p.left), sub(p.right)}; },
                          [&](const SRec& r) -> Sgp {
                              if (r.var == var) return s;
                              return SRec{r.var, sub(r.body)};
                          },
                          [&](const SVar& v) -> Sgp { return v.var == var ? by : s; },
                          [&](const SEnd&) { return s; },
                      },
                      s.node().v);
}

GlobalType unfold_head(const GlobalType& g) {
    GlobalType cur = g;
    for (int guard = 0; guard < 1000; ++guard) {
        auto r = cur.as<GRec>();
        if (!r) return cur;
        cur = substitute_tvar(r->body, r->var, cur);
    }
    return cur;
}

LocalType unfold_head(const LocalType& l) {
    LocalType cur = l;
    for (int guard = 0; guard < 1000; ++guard) {
        auto r = cur.as<LRec>();
        if (!r) return cur;
        cur = substitute_tvar(r->body, r->var, cur);
    }
    return cur;
}

Sgp unfold_head(const Sgp& s) {
    Sgp cur = s;
    for (int guard = 0; guard < 1000; ++guard) {
        auto r = cur.as<SRec>();
        if (!r) return cur;
        cur = substitute_svar(r->body, r->var, cur);
    }
    return cur;
}

Expr substitute_avars(const Expr& e, const Vector& vec) {
    return std::visit(overloaded{
                          [&](const AVarRef& v) -> Expr {
                              auto it = vec.find(v.var);
                              return it == vec.end() ? e : value_expr(it->second);
                          },
                          [&](const Unary& u) -> Expr {
                              return Unary{u.op, substitute_avars(u.arg, vec)};
                          },
                          [&](const Binary& b) -> Expr {
                              return Binary{b.op, substitute_avars(b.lhs, vec),
                                            substitute_avars(b.rhs, vec)};
                          },
                          [&](const auto&) { return e; },
                      },
                      e.node().v);
}

} // namespace mpst
