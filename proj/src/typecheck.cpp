#include "mpst/typecheck.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <sstream>
#include <unordered_set>

#include "mpst/projection.hpp"
#include "visit.hpp"

namespace mpst {

using detail::overloaded;

namespace {

constexpr std::size_t kResSearchCap = 1'000'000;
constexpr std::size_t kParSplitCap = 12;

std::string actor_text(const Actor& a) { return a.session + "[" + std::to_string(a.role.id) + "]"; }

std::string describe(const Process& p) {
    std::ostringstream os;
    std::visit(overloaded{
                   [&](const PRequest& x) { os << "req " << x.shared << '(' << x.roles << ")(" << x.session << ')'; },
                   [&](const PAccept& x) {
                       os << "acc " << x.shared << '[' << x.role.id << "](" << x.session << ')';
                   },
                   [&](const PSend& x) {
                       os << x.session << '[' << x.from.id << "->" << x.to.id << "]!" << x.label << '<';
                       for (std::size_t i = 0; i < x.args.size(); ++i) os << (i ? ", " : "") << render(x.args[i]);
                       os << '>';
                   },
                   [&](const PRecv& x) {
                       os << x.session << '[' << x.self.id << "<-" << x.from.id << "]?{";
                       for (std::size_t i = 0; i < x.branches.size(); ++i)
                           os << (i ? " ; " : "") << x.branches[i].label;
                       os << '}';
                   },
                   [&](const PCond& x) { os << "if " << render(x.cond); },
                   [&](const PPar&) { os << "P | Q"; },
                   [&](const PEnd&) { os << '0'; },
                   [&](const PRestrict& x) { os << "new " << x.session; },
                   [&](const PRec& x) { os << "rec " << x.var; },
                   [&](const PVar& x) { os << x.var; },
               },
               p.node().v);
    return os.str();
}

std::string rule_of(const Process& p) {
    static const char* names[] = {"Req", "Acc", "Send", "Get", "Cond", "Par", "End", "Res", "Rec", "Var"};
    return names[p.node().v.index()];
}

bool roles_are_prefix(const GlobalType& g, std::uint32_t n) {
    auto rs = roles(g);
    if (rs.size() != n) return false;
    std::uint32_t k = 1;
    for (Role r : rs)
        if (r.id != k++) return false;
    return true;
}

std::set<std::string> labels(const std::vector<LBranch>& bs) {
    std::set<std::string> out;
    for (const auto& b : bs) out.insert(b.label);
    return out;
}

const LBranch* find_branch(const std::vector<LBranch>& bs, const std::string& label) {
    for (const auto& b : bs)
        if (b.label == label) return &b;
    return nullptr;
}

bool equivalent_rec(const LocalType& x, const LocalType& y, std::set<std::pair<std::string, std::string>>& assumed) {
    LocalType a = unfold_head(x);
    LocalType b = unfold_head(y);
    if (a.is<LEnd>() || b.is<LEnd>()) return a.is<LEnd>() && b.is<LEnd>();
    if (auto va = a.as<LVar>()) {
        auto vb = b.as<LVar>();
        return vb && va->var == vb->var;
    }
    if (!assumed.insert({render(a), render(b)}).second) return true;
    auto same = [&](Role pa, const std::vector<LBranch>& ba, Role pb, const std::vector<LBranch>& bb) {
        if (pa != pb || labels(ba) != labels(bb)) return false;
        for (const auto& br : ba) {
            const LBranch* other = find_branch(bb, br.label);
            if (other->sorts != br.sorts || !equivalent_rec(br.cont, other->cont, assumed)) return false;
        }
        return true;
    };
    if (auto sa = a.as<LSend>()) {
        auto sb = b.as<LSend>();
        return sb && same(sa->peer, sa->branches, sb->peer, sb->branches);
    }
    auto ra = a.as<LRecv>();
    auto rb = b.as<LRecv>();
    return ra && rb && same(ra->peer, ra->branches, rb->peer, rb->branches);
}

SessionEnv normalized(const SessionEnv& d) {
    SessionEnv out;
    out.invites = d.invites;
    for (const auto& [a, l] : d.locals) out.set(a, l);
    return out;
}

void collect_sorts(const Expr& e, bool bool_pos, std::map<std::string, Sort>& out) {
    auto note = [&](const std::string& name) {
        if (bool_pos)
            out[name] = Sort::Bool;
        else
            out.emplace(name, Sort::Int);
    };
    std::visit(overloaded{
                   [&](const VarRef& v) { note(v.name); },
                   [&](const ParamRef& v) { note(v.name); },
                   [&](const AVarRef& v) { note(render(v.var)); },
                   [&](const Unary& u) { collect_sorts(u.arg, u.op == UnOp::Not, out); },
                   [&](const Binary& b) {
                       bool logical = b.op == BinOp::And || b.op == BinOp::Or;
                       collect_sorts(b.lhs, logical, out);
                       collect_sorts(b.rhs, logical, out);
                   },
                   [](const auto&) {},
               },
               e.node().v);
}

class Checker {
public:
    std::vector<RuleApplication> trace;
    std::optional<Diagnostic> first_failure;

    bool check(const GlobalEnv& g, const Process& p, const SessionEnv& d) {
        std::size_t mark = trace.size();
        trace.push_back({rule_of(p), describe(p)});
        bool ok = std::visit([&](const auto& x) { return rule(g, x, d); }, p.node().v);
        if (!ok) trace.resize(mark);
        return ok;
    }

private:
    bool fail(const std::string& rule, const std::string& message) {
        if (!first_failure) first_failure = Diagnostic{Severity::Error, {}, message, rule};
        return false;
    }

    std::optional<LocalType> projection(const GlobalType& g, Role r, const std::string& rule) {
        auto key = std::make_pair(render(g), r.id);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        auto l = try_project(g, r);
        if (!l) {
            fail("Projection", rule + ": projection onto role " + std::to_string(r.id) + " undefined");
            return std::nullopt;
        }
        cache_.emplace(key, *l);
        return l;
    }

    bool sorts_ok(const GlobalEnv& g, const std::vector<Expr>& args, const std::vector<Sort>& want,
                  const std::string& where) {
        if (args.size() != want.size())
            return fail("Send", where + ": " + std::to_string(args.size()) + " arguments, type expects " +
                                    std::to_string(want.size()));
        for (std::size_t i = 0; i < args.size(); ++i) {
            std::string why;
            auto s = sort_of(args[i], g.sorts, &why);
            if (!s) return fail("Send", where + ": " + why);
            if (*s != want[i])
                return fail("Send", where + ": argument " + render(args[i]) + " has sort " + to_string(*s) +
                                        ", type expects " + to_string(want[i]));
        }
        return true;
    }

    bool join(const GlobalEnv& g, const std::string& rule, const std::string& shared, Role role,
              const std::string& session, const Process& cont, const SessionEnv& d) {
        if (g.used.count(shared)) return fail(rule, "shared channel " + shared + " was already used");
        auto it = g.shared.find(shared);
        if (it == g.shared.end()) return fail(rule, "no global type for shared channel " + shared);
        const GlobalType& gt = it->second;
        if (!roles(gt).count(role))
            return fail(rule, "role " + std::to_string(role.id) + " is not a role of the type of " + shared);
        Invite inv{shared, role};
        if (!d.invites.count(inv))
            return fail(rule, "no obligation to invite role " + std::to_string(role.id) + " on " + shared);
        Actor a{session, role};
        if (d.locals.count(a)) return fail(rule, "session " + session + " is already open at " + actor_text(a));
        auto l = projection(gt, role, rule);
        if (!l) return false;
        GlobalEnv g2 = g;
        g2.shared.erase(shared);
        g2.used.insert_or_assign(shared, std::make_pair(gt, session));
        SessionEnv d2 = d;
        d2.invites.erase(inv);
        d2.set(a, *l);
        return check(g2, cont, d2);
    }

    bool rule(const GlobalEnv& g, const PRequest& x, const SessionEnv& d) {
        if (auto it = g.shared.find(x.shared); it != g.shared.end() && !roles_are_prefix(it->second, x.roles))
            return fail("Req", "request on " + x.shared + " invites " + std::to_string(x.roles) +
                                   " roles, the global type has roles " + std::to_string(roles(it->second).size()));
        return join(g, "Req", x.shared, Role{1}, x.session, x.cont, d);
    }

    bool rule(const GlobalEnv& g, const PAccept& x, const SessionEnv& d) {
        return join(g, "Acc", x.shared, x.role, x.session, x.cont, d);
    }

    bool rule(const GlobalEnv& g, const PSend& x, const SessionEnv& d) {
        Actor a{x.session, x.from};
        auto it = d.locals.find(a);
        if (it == d.locals.end()) return fail("Send", "no local type for " + actor_text(a));
        LocalType t = unfold_head(it->second);
        auto snd = t.as<LSend>();
        if (!snd) return fail("Send", actor_text(a) + " sends but its type is " + render(t));
        if (snd->peer != x.to)
            return fail("Send", actor_text(a) + " sends to " + std::to_string(x.to.id) + ", type expects " +
                                    std::to_string(snd->peer.id));
        const LBranch* br = find_branch(snd->branches, x.label);
        if (!br) return fail("Send", actor_text(a) + " sends label '" + x.label + "' not offered by " + render(t));
        if (!sorts_ok(g, x.args, br->sorts, describe(Process{x}))) return false;
        SessionEnv d2 = d;
        d2.set(a, br->cont);
        return check(g, x.cont, d2);
    }

    bool rule(const GlobalEnv& g, const PRecv& x, const SessionEnv& d) {
        Actor a{x.session, x.self};
        auto it = d.locals.find(a);
        if (it == d.locals.end()) return fail("Get", "no local type for " + actor_text(a));
        LocalType t = unfold_head(it->second);
        auto rcv = t.as<LRecv>();
        if (!rcv) return fail("Get", actor_text(a) + " receives but its type is " + render(t));
        if (rcv->peer != x.from)
            return fail("Get", actor_text(a) + " receives from " + std::to_string(x.from.id) + ", type expects " +
                                   std::to_string(rcv->peer.id));
        for (const auto& tb : rcv->branches) {
            auto pb = std::find_if(x.branches.begin(), x.branches.end(),
                                   [&](const PBranch& b) { return b.label == tb.label; });
            if (pb == x.branches.end())
                return fail("Get", actor_text(a) + " lacks a branch for label '" + tb.label + "'");
            if (pb->binders.size() != tb.sorts.size())
                return fail("Get", actor_text(a) + " binds " + std::to_string(pb->binders.size()) +
                                       " values for '" + tb.label + "', type carries " +
                                       std::to_string(tb.sorts.size()));
            GlobalEnv g2 = g;
            for (std::size_t i = 0; i < tb.sorts.size(); ++i) g2.sorts[pb->binders[i]] = tb.sorts[i];
            SessionEnv d2 = d;
            d2.set(a, tb.cont);
            if (!check(g2, pb->cont, d2)) return false;
        }
        return true;
    }

    bool rule(const GlobalEnv& g, const PCond& x, const SessionEnv& d) {
        std::string why;
        auto s = sort_of(x.cond, g.sorts, &why);
        if (!s) return fail("Cond", why);
        if (*s != Sort::Bool) return fail("Cond", "condition " + render(x.cond) + " is not Bool");
        return check(g, x.then_branch, d) && check(g, x.else_branch, d);
    }

    bool rule(const GlobalEnv&, const PEnd&, const SessionEnv& d) {
        if (!d.empty()) return fail("End", "terminated process with pending obligations " + d.key());
        return true;
    }

    bool rule(const GlobalEnv& g, const PRec& x, const SessionEnv& d) {
        GlobalEnv g2 = g;
        g2.pvars[x.var] = d;
        return check(g2, x.body, d);
    }

    bool rule(const GlobalEnv& g, const PVar& x, const SessionEnv& d) {
        auto it = g.pvars.find(x.var);
        if (it == g.pvars.end()) return fail("Var", "unbound process variable " + x.var);
        if (!equivalent(it->second, d))
            return fail("Var", "loop " + x.var + " ends with " + d.key() + " but started with " + it->second.key());
        return true;
    }

    // Entries a side can use: its free actors, its invitations, and the snapshots of its free
    // process variables.
    struct Claims {
        std::set<Actor> actors;
        std::set<Invite> invites;
        bool restricts = false;
    };

    Claims claims_of(const GlobalEnv& g, const Process& p) {
        Claims c;
        auto names = free_names(p);
        for (const auto& a : actors(p))
            if (names.count(a.session)) c.actors.insert(a);
        std::function<void(const Process&)> walk = [&](const Process& q) {
            std::visit(overloaded{
                           [&](const PRequest& x) {
                               c.invites.insert({x.shared, Role{1}});
                               walk(x.cont);
                           },
                           [&](const PAccept& x) {
                               c.invites.insert({x.shared, x.role});
                               walk(x.cont);
                           },
                           [&](const PSend& x) { walk(x.cont); },
                           [&](const PRecv& x) {
                               for (const auto& b : x.branches) walk(b.cont);
                           },
                           [&](const PCond& x) {
                               walk(x.then_branch);
                               walk(x.else_branch);
                           },
                           [&](const PPar& x) {
                               walk(x.left);
                               walk(x.right);
                           },
                           [&](const PRestrict& x) {
                               c.restricts = true;
                               walk(x.body);
                           },
                           [&](const PRec& x) { walk(x.body); },
                           [](const auto&) {},
                       },
                       q.node().v);
        };
        walk(p);
        for (const auto& v : free_pvars(p)) {
            auto it = g.pvars.find(v);
            if (it == g.pvars.end()) continue;
            for (const auto& [a, l] : it->second.locals) c.actors.insert(a);
            c.invites.insert(it->second.invites.begin(), it->second.invites.end());
        }
        return c;
    }

    bool rule(const GlobalEnv& g, const PPar& x, const SessionEnv& d) {
        Claims cl = claims_of(g, x.left);
        Claims cr = claims_of(g, x.right);
        SessionEnv dl, dr;
        std::vector<std::variant<Invite, Actor>> open;
        auto place = [&](bool l, bool r, auto&& key, auto&& to_left, auto&& to_right,
                         const std::string& what) -> bool {
            if (!l && !r) {
                l = cl.restricts;
                r = cr.restricts;
            }
            if (l && r) {
                open.push_back(key);
                return true;
            }
            if (l) {
                to_left();
                return true;
            }
            if (r) {
                to_right();
                return true;
            }
            return fail("Par", what + " is used by neither side of the parallel composition");
        };
        for (const auto& inv : d.invites) {
            if (!place(cl.invites.count(inv) > 0, cr.invites.count(inv) > 0, inv,
                       [&] { dl.invites.insert(inv); }, [&] { dr.invites.insert(inv); },
                       inv.shared + ":<invite " + std::to_string(inv.role.id) + ">"))
                return false;
        }
        for (const auto& [a, l] : d.locals) {
            const LocalType& t = l;
            if (!place(cl.actors.count(a) > 0, cr.actors.count(a) > 0, a, [&] { dl.locals.emplace(a, t); },
                       [&] { dr.locals.emplace(a, t); }, actor_text(a)))
                return false;
        }
        if (open.size() > kParSplitCap) return fail("Par", "too many ambiguous entries to split");
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << open.size()); ++mask) {
            SessionEnv l = dl, r = dr;
            for (std::size_t i = 0; i < open.size(); ++i) {
                SessionEnv& side = (mask >> i) & 1 ? r : l;
                if (auto inv = std::get_if<Invite>(&open[i]))
                    side.invites.insert(*inv);
                else {
                    const Actor& a = std::get<Actor>(open[i]);
                    side.locals.emplace(a, d.locals.at(a));
                }
            }
            if (check(g, x.left, l) && check(g, x.right, r)) return true;
        }
        return false;
    }

    bool rule(const GlobalEnv& g, const PRestrict& x, const SessionEnv& d) {
        bool tried = false;
        for (const auto& [a, gt] : g.shared) {
            auto rs = roles(gt);
            bool all = std::all_of(rs.begin(), rs.end(), [&](Role r) { return d.invites.count({a, r}) > 0; });
            if (!all) continue;
            tried = true;
            SessionEnv d0 = d;
            bool ok = true;
            for (Role r : rs) {
                d0.invites.erase({a, r});
                Actor act{x.session, r};
                if (d0.locals.count(act)) {
                    ok = false;
                    break;
                }
                auto l = projection(gt, r, "Res");
                if (!l) {
                    ok = false;
                    break;
                }
                d0.set(act, *l);
            }
            if (!ok) continue;
            GlobalEnv g2 = g;
            g2.shared.erase(a);
            g2.used.insert_or_assign(a, std::make_pair(gt, x.session));
            std::deque<SessionEnv> queue{d0};
            std::unordered_set<std::string> seen{d0.key()};
            while (!queue.empty()) {
                SessionEnv cur = std::move(queue.front());
                queue.pop_front();
                if (check(g2, x.body, cur)) return true;
                for (auto& n : env_step(cur)) {
                    if (seen.size() >= kResSearchCap) return fail("Res", "environment search exceeded its bound");
                    if (seen.insert(n.key()).second) queue.push_back(std::move(n));
                }
            }
        }
        if (!tried) return fail("Res", "no unused shared channel with all invitations for session " + x.session);
        return fail("Res", "no evolution of the environment types the body of new " + x.session);
    }

    std::map<std::pair<std::string, std::uint32_t>, LocalType> cache_;
};

// For each prefix of an actor, the continuation uses no other role of the same session.
bool distributed(const Process& p) {
    auto only_role = [](const Actor& a, const Process& cont) {
        for (const auto& b : actors(cont))
            if (b.session == a.session && b.role != a.role) return false;
        return true;
    };
    return std::visit(overloaded{
                          [&](const PRequest& x) {
                              return only_role({x.session, Role{1}}, x.cont) && distributed(x.cont);
                          },
                          [&](const PAccept& x) { return only_role({x.session, x.role}, x.cont) && distributed(x.cont); },
                          [&](const PSend& x) { return only_role({x.session, x.from}, x.cont) && distributed(x.cont); },
                          [&](const PRecv& x) {
                              return std::all_of(x.branches.begin(), x.branches.end(), [&](const PBranch& b) {
                                  return only_role({x.session, x.self}, b.cont) && distributed(b.cont);
                              });
                          },
                          [&](const PCond& x) { return distributed(x.then_branch) && distributed(x.else_branch); },
                          [&](const PPar& x) {
                              auto l = actors(x.left);
                              for (const auto& a : actors(x.right))
                                  if (l.count(a)) return false;
                              return distributed(x.left) && distributed(x.right);
                          },
                          [&](const PRestrict& x) { return distributed(x.body); },
                          [&](const PRec& x) { return distributed(x.body); },
                          [](const auto&) { return true; },
                      },
                      p.node().v);
}

void scan_deps(const Process& p, std::vector<std::string>& guards, const std::set<std::string>& sessions,
               DepGraph& g) {
    auto prefix = [&](const std::string& s, const Process& self, auto&& next) {
        if (sessions.count(s)) {
            for (const auto& from : guards) {
                if (from == s) continue;
                bool dup = std::any_of(g.edges.begin(), g.edges.end(),
                                       [&](const DepEdge& e) { return e.from == from && e.to == s; });
                if (!dup) g.edges.push_back({from, s, describe(self) + " is guarded by an action on " + from});
            }
            guards.push_back(s);
        }
        next();
        if (sessions.count(s)) guards.pop_back();
    };
    std::visit(overloaded{
                   [&](const PRequest& x) { prefix(x.session, p, [&] { scan_deps(x.cont, guards, sessions, g); }); },
                   [&](const PAccept& x) { prefix(x.session, p, [&] { scan_deps(x.cont, guards, sessions, g); }); },
                   [&](const PSend& x) { prefix(x.session, p, [&] { scan_deps(x.cont, guards, sessions, g); }); },
                   [&](const PRecv& x) {
                       prefix(x.session, p, [&] {
                           for (const auto& b : x.branches) scan_deps(b.cont, guards, sessions, g);
                       });
                   },
                   [&](const PCond& x) {
                       scan_deps(x.then_branch, guards, sessions, g);
                       scan_deps(x.else_branch, guards, sessions, g);
                   },
                   [&](const PPar& x) {
                       scan_deps(x.left, guards, sessions, g);
                       scan_deps(x.right, guards, sessions, g);
                   },
                   [&](const PRestrict& x) { scan_deps(x.body, guards, sessions, g); },
                   [&](const PRec& x) { scan_deps(x.body, guards, sessions, g); },
                   [](const auto&) {},
               },
               p.node().v);
}

// Shared channels that request or accept the given session name.
std::set<std::string> channels_for(const Process& p, const std::string& session) {
    std::set<std::string> out;
    std::function<void(const Process&)> walk = [&](const Process& q) {
        std::visit(overloaded{
                       [&](const PRequest& x) {
                           if (x.session == session) out.insert(x.shared);
                           walk(x.cont);
                       },
                       [&](const PAccept& x) {
                           if (x.session == session) out.insert(x.shared);
                           walk(x.cont);
                       },
                       [&](const PSend& x) { walk(x.cont); },
                       [&](const PRecv& x) {
                           for (const auto& b : x.branches) walk(b.cont);
                       },
                       [&](const PCond& x) {
                           walk(x.then_branch);
                           walk(x.else_branch);
                       },
                       [&](const PPar& x) {
                           walk(x.left);
                           walk(x.right);
                       },
                       [&](const PRestrict& x) { walk(x.body); },
                       [&](const PRec& x) { walk(x.body); },
                       [](const auto&) {},
                   },
                   q.node().v);
    };
    walk(p);
    return out;
}

// Sessions opened through a shared channel, by name.
std::set<std::string> sessions_for(const Process& p, const std::string& shared) {
    std::set<std::string> out;
    for (const auto& a : actors(p))
        if (channels_for(p, a.session).count(shared)) out.insert(a.session);
    return out;
}

} // namespace

void SessionEnv::set(const Actor& a, const LocalType& l) {
    LocalType h = unfold_head(l);
    if (h.is<LEnd>())
        locals.erase(a);
    else
        locals.insert_or_assign(a, h);
}

std::string SessionEnv::key() const {
    std::string out = "{";
    bool first = true;
    for (const auto& i : invites) {
        out += (first ? "" : ", ") + i.shared + ":<invite " + std::to_string(i.role.id) + ">";
        first = false;
    }
    for (const auto& [a, l] : locals) {
        out += (first ? "" : ", ") + actor_text(a) + ":" + render(l);
        first = false;
    }
    return out + "}";
}

std::optional<Sort> sort_of(const Expr& e, const std::map<std::string, Sort>& sorts, std::string* why) {
    auto fail = [&](const std::string& msg) -> std::optional<Sort> {
        if (why) *why = msg;
        return std::nullopt;
    };
    auto lookup = [&](const std::string& name) -> std::optional<Sort> {
        auto it = sorts.find(name);
        if (it == sorts.end()) return fail("no sort for '" + name + "'");
        return it->second;
    };
    return std::visit(
        overloaded{
            [&](const IntLit&) -> std::optional<Sort> { return Sort::Int; },
            [&](const BoolLit&) -> std::optional<Sort> { return Sort::Bool; },
            [&](const VarRef& v) { return lookup(v.name); },
            [&](const ParamRef& v) { return lookup(v.name); },
            [&](const AVarRef& v) -> std::optional<Sort> {
                if (auto it = sorts.find(render(v.var)); it != sorts.end()) return it->second;
                if (auto it = sorts.find(v.var.base); it != sorts.end()) return it->second;
                return Sort::Int;
            },
            [&](const Unary& u) -> std::optional<Sort> {
                auto s = sort_of(u.arg, sorts, why);
                if (!s) return s;
                Sort want = u.op == UnOp::Not ? Sort::Bool : Sort::Int;
                if (*s != want) return fail("operand of " + render(e) + " must be " + to_string(want));
                return want;
            },
            [&](const Binary& b) -> std::optional<Sort> {
                auto l = sort_of(b.lhs, sorts, why);
                if (!l) return l;
                auto r = sort_of(b.rhs, sorts, why);
                if (!r) return r;
                switch (b.op) {
                case BinOp::Eq:
                case BinOp::Ne:
                    if (*l != *r) return fail("operands of " + render(e) + " have different sorts");
                    return Sort::Bool;
                case BinOp::And:
                case BinOp::Or:
                    if (*l != Sort::Bool || *r != Sort::Bool) return fail("operands of " + render(e) + " must be Bool");
                    return Sort::Bool;
                case BinOp::Lt:
                case BinOp::Le:
                case BinOp::Gt:
                case BinOp::Ge:
                    if (*l != Sort::Int || *r != Sort::Int) return fail("operands of " + render(e) + " must be Int");
                    return Sort::Bool;
                default:
                    if (*l != Sort::Int || *r != Sort::Int) return fail("operands of " + render(e) + " must be Int");
                    return Sort::Int;
                }
            },
        },
        e.node().v);
}

std::map<std::string, Sort> infer_sorts(const Process& p) {
    std::map<std::string, Sort> out;
    std::function<void(const Process&)> walk = [&](const Process& q) {
        std::visit(overloaded{
                       [&](const PRequest& x) { walk(x.cont); },
                       [&](const PAccept& x) { walk(x.cont); },
                       [&](const PSend& x) {
                           for (const auto& a : x.args) collect_sorts(a, false, out);
                           walk(x.cont);
                       },
                       [&](const PRecv& x) {
                           for (const auto& b : x.branches) walk(b.cont);
                       },
                       [&](const PCond& x) {
                           collect_sorts(x.cond, true, out);
                           walk(x.then_branch);
                           walk(x.else_branch);
                       },
                       [&](const PPar& x) {
                           walk(x.left);
                           walk(x.right);
                       },
                       [&](const PRestrict& x) { walk(x.body); },
                       [&](const PRec& x) { walk(x.body); },
                       [](const auto&) {},
                   },
                   q.node().v);
    };
    walk(p);
    return out;
}

TypingReport typecheck(const GlobalEnv& gamma, const Process& p, const SessionEnv& delta) {
    GlobalEnv g = gamma;
    for (const auto& [name, s] : infer_sorts(p)) g.sorts.emplace(name, s);
    Checker c;
    TypingReport r;
    r.verdict = c.check(g, p, normalized(delta));
    if (r.verdict) {
        r.trace = std::move(c.trace);
    } else {
        r.failures.push_back(c.first_failure.value_or(Diagnostic{Severity::Error, {}, "not typable", "Typing"}));
    }
    return r;
}

std::vector<SessionEnv> env_step(const SessionEnv& delta) {
    std::vector<SessionEnv> out;
    for (const auto& [a1, raw] : delta.locals) {
        LocalType t1 = unfold_head(raw);
        if (auto snd = t1.as<LSend>()) {
            Actor a2{a1.session, snd->peer};
            auto it = delta.locals.find(a2);
            if (it == delta.locals.end()) continue;
            LocalType t2 = unfold_head(it->second);
            auto rcv = t2.as<LRecv>();
            if (!rcv || rcv->peer != a1.role || labels(rcv->branches) != labels(snd->branches)) continue;
            for (const auto& b : snd->branches) {
                const LBranch* rb = find_branch(rcv->branches, b.label);
                if (rb->sorts != b.sorts) continue;
                SessionEnv n = delta;
                n.set(a1, b.cont);
                n.set(a2, rb->cont);
                out.push_back(std::move(n));
            }
        } else if (auto rcv = t1.as<LRecv>()) {
            std::size_t k = rcv->branches.size();
            if (k < 2 || k > 16) continue;
            for (std::uint32_t mask = 1; mask + 1 < (1u << k); ++mask) {
                std::vector<LBranch> keep;
                for (std::size_t i = 0; i < k; ++i)
                    if ((mask >> i) & 1) keep.push_back(rcv->branches[i]);
                SessionEnv n = delta;
                n.set(a1, LRecv{rcv->peer, std::move(keep)});
                out.push_back(std::move(n));
            }
        }
    }
    return out;
}

bool equivalent(const LocalType& a, const LocalType& b) {
    std::set<std::pair<std::string, std::string>> assumed;
    return equivalent_rec(a, b, assumed);
}

bool equivalent(const SessionEnv& x, const SessionEnv& y) {
    SessionEnv a = normalized(x);
    SessionEnv b = normalized(y);
    if (a.invites != b.invites || a.locals.size() != b.locals.size()) return false;
    for (const auto& [act, l] : a.locals) {
        auto it = b.locals.find(act);
        if (it == b.locals.end() || !equivalent(l, it->second)) return false;
    }
    return true;
}

bool coherent(const SessionEnv& delta, const std::vector<SessionBinding>& bindings) {
    SessionEnv d = normalized(delta);
    auto bound = [&](const std::string& n) -> const SessionBinding* {
        for (const auto& b : bindings)
            if (b.name == n) return &b;
        return nullptr;
    };
    std::set<std::string> sessions, shared;
    for (const auto& [a, l] : d.locals) sessions.insert(a.session);
    for (const auto& i : d.invites) shared.insert(i.shared);
    for (const auto& s : sessions) {
        const SessionBinding* b = bound(s);
        if (!b) return false;
        SessionEnv want, have;
        for (Role r : roles(b->type)) {
            auto l = try_project(b->type, r);
            if (!l) return false;
            want.set({s, r}, *l);
        }
        for (const auto& [a, l] : d.locals)
            if (a.session == s) have.locals.emplace(a, l);
        if (!equivalent(want, have)) return false;
    }
    for (const auto& a : shared) {
        const SessionBinding* b = bound(a);
        if (!b) return false;
        std::set<Role> rs;
        for (const auto& i : d.invites)
            if (i.shared == a) rs.insert(i.role);
        if (rs != roles(b->type)) return false;
    }
    return true;
}

bool role_distributed(const Process& p) { return distributed(p); }

bool DepGraph::acyclic() const {
    auto o = order();
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < o.size(); ++i) pos[o[i]] = i;
    return std::all_of(edges.begin(), edges.end(), [&](const DepEdge& e) { return pos[e.from] < pos[e.to]; });
}

std::vector<std::string> DepGraph::order() const {
    std::map<std::string, int> indeg;
    for (const auto& n : nodes) indeg[n] = 0;
    for (const auto& e : edges) {
        indeg[e.from];
        ++indeg[e.to];
    }
    std::set<std::string> ready;
    for (const auto& [n, k] : indeg)
        if (k == 0) ready.insert(n);
    std::vector<std::string> out;
    std::set<std::string> done;
    while (!ready.empty()) {
        std::string n = *ready.begin();
        ready.erase(ready.begin());
        out.push_back(n);
        done.insert(n);
        for (const auto& e : edges)
            if (e.from == n && --indeg[e.to] == 0) ready.insert(e.to);
    }
    for (const auto& [n, k] : indeg)
        if (!done.count(n)) out.push_back(n);
    return out;
}

DepGraph dependency_graph(const Process& p, const std::set<std::string>& sessions) {
    DepGraph g;
    g.nodes = sessions;
    std::vector<std::string> guards;
    scan_deps(p, guards, sessions, g);
    return g;
}

TypingReport well_typed(const Process& p, const std::vector<SessionBinding>& sessions) {
    auto failed = [](const std::string& code, const std::string& msg) {
        TypingReport r;
        r.failures.push_back({Severity::Error, {}, msg, code});
        return r;
    };
    for (std::size_t i = 0; i < sessions.size(); ++i)
        for (std::size_t j = i + 1; j < sessions.size(); ++j)
            if (sessions[i].name == sessions[j].name)
                return failed("Coherence", "session name " + sessions[i].name + " is bound twice");
    if (!role_distributed(p)) return failed("RoleDistribution", "actors of one session are composed sequentially");

    GlobalEnv gamma;
    SessionEnv delta;
    std::vector<SessionBinding> coherence;
    std::set<std::string> dep_nodes;
    auto names = free_names(p);
    for (const auto& b : sessions) {
        Projectability pr = projectable(b.type);
        if (!pr.ok)
            return failed("Projection", "type of " + b.name + ": " + pr.diagnostics.front().message);
        auto invite = [&](const std::string& a) {
            gamma.shared.insert_or_assign(a, b.type);
            for (Role r : roles(b.type)) delta.invites.insert({a, r});
            coherence.push_back({b.type, a});
        };
        auto opened = channels_for(p, b.name);
        if (names.count(b.name) && !sessions_for(p, b.name).empty()) {
            // The binding names a shared channel of p.
            invite(b.name);
            for (const auto& s : sessions_for(p, b.name)) dep_nodes.insert(s);
        } else if (names.count(b.name)) {
            for (const auto& [r, l] : pr.projections) delta.set({b.name, r}, l);
            gamma.used.insert_or_assign("a#" + b.name, std::make_pair(b.type, b.name));
            coherence.push_back(b);
            dep_nodes.insert(b.name);
        } else if (!opened.empty()) {
            if (opened.size() > 1)
                return failed("Coherence", "session " + b.name + " is opened on several shared channels");
            invite(*opened.begin());
            dep_nodes.insert(b.name);
        } else {
            invite("a#" + b.name);
            dep_nodes.insert(b.name);
        }
    }
    if (!coherent(delta, coherence)) return failed("Coherence", "synthesised environment is not coherent");
    TypingReport r = typecheck(gamma, p, delta);
    if (!r.verdict) return r;
    if (sessions.size() > 1) {
        DepGraph g = dependency_graph(p, dep_nodes);
        if (!g.acyclic()) {
            TypingReport bad = failed("Dependency", "cyclic dependency between sessions");
            for (const auto& e : g.edges) bad.failures.front().message += "; " + e.witness;
            return bad;
        }
    }
    return r;
}

} // namespace mpst
