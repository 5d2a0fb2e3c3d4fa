#include "mpst/sequentialize.hpp"

#include <algorithm>
#include <numeric>

#include "mpst/semantics.hpp"
#include "mpst/typecheck.hpp"

namespace mpst {

namespace {

struct Session {
    GlobalType type;
    /// Channel name used by the processes.
    std::string name;
    /// Session name used in vector annotations and provenance.
    std::string orig;
    /// Shared channel that opens the session, while it is not initialised.
    std::string shared;
    bool initialized = true;
};

struct State {
    std::vector<Process> procs;
    std::vector<Session> sessions;
    std::size_t depth = 0;
    std::size_t unfolds = 0;
};

Process compose(const std::vector<Process>& procs) {
    if (procs.empty()) return end_process();
    Process out = procs.back();
    for (auto it = procs.rbegin() + 1; it != procs.rend(); ++it) out = PPar{*it, out};
    return out;
}

std::string svar_name(std::vector<std::string> tvars) {
    std::sort(tvars.begin(), tvars.end());
    std::string out = "X";
    for (const auto& t : tvars) out += "_" + t;
    return out;
}

bool touches_shared(const Process& p, const std::string& shared) {
    if (auto r = p.as<PRequest>()) return r->shared == shared || touches_shared(r->cont, shared);
    if (auto a = p.as<PAccept>()) return a->shared == shared || touches_shared(a->cont, shared);
    if (auto s = p.as<PSend>()) return touches_shared(s->cont, shared);
    if (auto v = p.as<PRecv>())
        return std::any_of(v->branches.begin(), v->branches.end(),
                           [&](const PBranch& b) { return touches_shared(b.cont, shared); });
    if (auto c = p.as<PCond>()) return touches_shared(c->then_branch, shared) || touches_shared(c->else_branch, shared);
    if (auto q = p.as<PPar>()) return touches_shared(q->left, shared) || touches_shared(q->right, shared);
    if (auto q = p.as<PRestrict>()) return touches_shared(q->body, shared);
    if (auto q = p.as<PRec>()) return touches_shared(q->body, shared);
    return false;
}

// Shared channel of a request or accept binding `session`, if any.
std::optional<std::string> opener_of(const Process& p, const std::string& session, bool by_channel) {
    std::optional<std::string> out;
    auto visit = [&](auto&& self, const Process& q) -> void {
        if (out) return;
        if (auto r = q.as<PRequest>()) {
            if ((by_channel ? r->shared : r->session) == session) out = r->shared;
            self(self, r->cont);
        } else if (auto a = q.as<PAccept>()) {
            if ((by_channel ? a->shared : a->session) == session) out = a->shared;
            self(self, a->cont);
        } else if (auto s = q.as<PSend>()) {
            self(self, s->cont);
        } else if (auto v = q.as<PRecv>()) {
            for (const auto& b : v->branches) self(self, b.cont);
        } else if (auto c = q.as<PCond>()) {
            self(self, c->then_branch);
            self(self, c->else_branch);
        } else if (auto pp = q.as<PPar>()) {
            self(self, pp->left);
            self(self, pp->right);
        } else if (auto rs = q.as<PRestrict>()) {
            self(self, rs->body);
        } else if (auto rc = q.as<PRec>()) {
            self(self, rc->body);
        }
    };
    visit(visit, p);
    return out;
}

bool cond_guards_sender(const Process& p, const std::string& session, Role from) {
    if (auto c = p.as<PCond>())
        return cond_guards_sender(c->then_branch, session, from) || cond_guards_sender(c->else_branch, session, from);
    if (auto s = p.as<PSend>()) return s->session == session && s->from == from;
    return false;
}

class Mapper {
public:
    Mapper(const SeqOptions& opts, std::size_t unfold_limit, std::size_t depth_limit)
        : opts_(opts), unfold_limit_(unfold_limit), depth_limit_(depth_limit) {}

    std::map<AnnotatedVar, Sort> sorts;
    std::map<std::string, std::size_t> cases;

    Sgp map(State st) {
        while (true) {
            if (++applications_ > opts_.max_applications)
                throw SeqError("NonTermination", "more case applications than the bound allows");
            if (++st.depth > depth_limit_)
                throw SeqError("NonTermination", "mapping does not terminate within the size bound");
            if (st.sessions.empty()) {
                note("1a");
                return end_sgp();
            }
            if (drop_ended(st)) continue;
            if (std::all_of(st.sessions.begin(), st.sessions.end(),
                            [](const Session& s) { return s.type.is<GVar>(); })) {
                note("2");
                std::vector<std::string> vs;
                for (const auto& s : st.sessions) vs.push_back(s.type.as<GVar>()->var);
                std::string name = svar_name(vs);
                auto entry = loop_entry_.find(name);
                if (opts_.align_loops && entry != loop_entry_.end() && !same_loop_state(entry->second, loop_threads(st.procs)))
                    throw SeqError("LoopsNotUnified", "the processes do not return to the state where loop " + name +
                                                          " was entered");
                return SVar{name};
            }
            if (structural(st)) continue;
            annotate_open(st);
            if (auto s = communicate(st)) return *s;
            if (st.sessions.size() == 1) {
                if (auto s = split_single(st)) return *s;
            } else {
                if (auto s = split_sessions(st)) return *s;
                if (split_type(st)) continue;
            }
            if (std::all_of(st.sessions.begin(), st.sessions.end(),
                            [](const Session& s) { return s.type.is<GRec>(); })) {
                note("8");
                std::vector<std::string> vs;
                for (auto& s : st.sessions) {
                    auto r = s.type.as<GRec>();
                    vs.push_back(r->var);
                    s.type = r->body;
                }
                std::string name = svar_name(vs);
                auto saved = loop_entry_.find(name) == loop_entry_.end() ? std::nullopt
                                                                         : std::optional{loop_entry_[name]};
                loop_entry_[name] = loop_threads(st.procs);
                Sgp body = map(std::move(st));
                if (saved) loop_entry_[name] = *saved;
                else loop_entry_.erase(name);
                return SRec{name, body};
            }
            if (auto s = invite(st)) return *s;
            if (auto s = branch(st)) return *s;
            bool loop = std::any_of(st.sessions.begin(), st.sessions.end(),
                                    [](const Session& s) { return s.type.is<GVar>(); });
            std::string types;
            for (const auto& s : st.sessions) types += " " + s.name + ":" + render(s.type);
            if (loop)
                throw SeqError("LoopsNotUnified",
                               "the loops of the interleaved sessions are not unified; residual types" + types);
            throw SeqError("Undefined", "no case applies to " + render(compose(st.procs)) + " with types" + types);
        }
    }

private:
    /// Entry states of the enclosing loops, by recursion variable.
    std::map<std::string, std::vector<Process>> loop_entry_;

    void note(const std::string& c) { ++cases[c]; }

    /// Threads with parallel composition and restriction taken apart; ended threads are dropped.
    static std::vector<Process> loop_threads(const std::vector<Process>& procs) {
        std::vector<Process> threads;
        auto walk = [&](auto&& self, const Process& p) -> void {
            if (p.is<PEnd>()) return;
            if (auto q = p.as<PPar>()) {
                self(self, q->left);
                self(self, q->right);
            } else if (auto r = p.as<PRestrict>()) {
                self(self, r->body);
            } else {
                threads.push_back(p);
            }
        };
        for (const auto& p : procs) walk(walk, p);
        return threads;
    }

    /// Equal up to recursion unfolding, where a receive may offer more labels than the other.
    static bool aligned(const Process& a, const Process& b, int fuel) {
        if (a == b) return true;
        if (fuel == 0) return false;
        if (auto r = a.as<PRec>()) return aligned(unfold(*r), b, fuel - 1);
        if (auto r = b.as<PRec>()) return aligned(a, unfold(*r), fuel - 1);
        if (auto x = a.as<PSend>()) {
            auto y = b.as<PSend>();
            return y && x->session == y->session && x->from == y->from && x->to == y->to && x->label == y->label &&
                   x->args == y->args && aligned(x->cont, y->cont, fuel);
        }
        if (auto x = a.as<PCond>()) {
            auto y = b.as<PCond>();
            return y && x->cond == y->cond && aligned(x->then_branch, y->then_branch, fuel) &&
                   aligned(x->else_branch, y->else_branch, fuel);
        }
        auto x = a.as<PRecv>();
        auto y = b.as<PRecv>();
        if (!x || !y || x->session != y->session || x->self != y->self || x->from != y->from) return false;
        const auto& small = x->branches.size() <= y->branches.size() ? x->branches : y->branches;
        const auto& large = x->branches.size() <= y->branches.size() ? y->branches : x->branches;
        for (const auto& br : small) {
            auto it = std::find_if(large.begin(), large.end(),
                                   [&](const PBranch& o) { return o.label == br.label; });
            if (it == large.end() || it->binders != br.binders || !aligned(br.cont, it->cont, fuel)) return false;
        }
        return true;
    }

    static bool same_loop_state(const std::vector<Process>& entry, const std::vector<Process>& now) {
        if (entry.size() != now.size()) return false;
        std::vector<bool> used(now.size(), false);
        for (const auto& e : entry) {
            bool found = false;
            for (std::size_t k = 0; k < now.size() && !found; ++k)
                if (!used[k] && aligned(e, now[k], 8)) used[k] = found = true;
            if (!found) return false;
        }
        return true;
    }

    bool drop_ended(State& st) {
        for (auto it = st.sessions.begin(); it != st.sessions.end(); ++it)
            if (is_terminated(it->type)) {
                note("1b");
                st.sessions.erase(it);
                return true;
            }
        return false;
    }

    // Cases 3, 4 and 5; `0` components are dropped along with case 4.
    bool structural(State& st) {
        for (auto& p : st.procs)
            if (auto r = p.as<PRestrict>()) {
                note("3");
                p = r->body;
                return true;
            }
        for (std::size_t k = 0; k < st.procs.size(); ++k) {
            if (st.procs[k].is<PEnd>()) {
                st.procs.erase(st.procs.begin() + static_cast<std::ptrdiff_t>(k));
                return true;
            }
            if (auto q = st.procs[k].as<PPar>()) {
                note("4");
                Process l = q->left, r = q->right;
                st.procs[k] = l;
                st.procs.insert(st.procs.begin() + static_cast<std::ptrdiff_t>(k) + 1, r);
                return true;
            }
        }
        for (auto& p : st.procs)
            if (auto r = p.as<PRec>()) {
                note("5");
                if (++st.unfolds > unfold_limit_)
                    throw SeqError("NonTermination", "process recursion " + r->var + " unfolded beyond the loop bound");
                p = unfold(*r);
                return true;
            }
        return false;
    }

    Process annotate(const Process& p, const Actor& a) {
        auto inferred = infer_sorts(p);
        for (const auto& x : free_vars(p)) {
            auto it = inferred.find(x);
            sorts.emplace(AnnotatedVar{x, a.session, a.role}, it == inferred.end() ? Sort::Int : it->second);
        }
        return annotate_actor(p, a);
    }

    // Free variables of a process acting in exactly one open session role belong to that actor.
    void annotate_open(State& st) {
        for (auto& p : st.procs) {
            if (free_vars(p).empty()) continue;
            auto names = free_names(p);
            std::set<Actor> mine;
            const Session* owner = nullptr;
            for (const auto& s : st.sessions) {
                if (!s.initialized || !names.count(s.name)) continue;
                for (const auto& a : actors(p))
                    if (a.session == s.name) {
                        mine.insert(a);
                        owner = &s;
                    }
            }
            if (mine.size() == 1) p = annotate(p, {owner->orig, mine.begin()->role});
        }
    }

    std::vector<std::size_t> session_order(const State& st) {
        std::set<std::string> names;
        for (const auto& s : st.sessions)
            if (s.initialized) names.insert(s.name);
        std::vector<std::size_t> out;
        for (const auto& n : dependency_graph(compose(st.procs), names).order())
            for (std::size_t j = 0; j < st.sessions.size(); ++j)
                if (st.sessions[j].initialized && st.sessions[j].name == n) out.push_back(j);
        return out;
    }

    // Case 6.
    std::optional<Sgp> communicate(State& st) {
        for (std::size_t l : session_order(st)) {
            const Session& ses = st.sessions[l];
            auto g = ses.type.as<GComm>();
            if (!g) continue;
            for (std::size_t m = 0; m < st.procs.size(); ++m) {
                auto snd = st.procs[m].as<PSend>();
                if (!snd || snd->session != ses.name || snd->from != g->from || snd->to != g->to) continue;
                auto gb = std::find_if(g->branches.begin(), g->branches.end(),
                                       [&](const GBranch& b) { return b.label == snd->label; });
                if (gb == g->branches.end()) continue;
                for (std::size_t o = 0; o < st.procs.size(); ++o) {
                    auto rcv = st.procs[o].as<PRecv>();
                    if (o == m || !rcv || rcv->session != ses.name || rcv->self != g->to || rcv->from != g->from)
                        continue;
                    auto pb = std::find_if(rcv->branches.begin(), rcv->branches.end(),
                                           [&](const PBranch& b) { return b.label == snd->label; });
                    if (pb == rcv->branches.end() || pb->binders.size() != snd->args.size()) continue;
                    note("6");
                    std::vector<AnnotatedVar> targets;
                    std::map<std::string, Expr> sub;
                    for (std::size_t i = 0; i < pb->binders.size(); ++i) {
                        AnnotatedVar v{pb->binders[i], ses.orig, g->to};
                        targets.push_back(v);
                        sub.insert_or_assign(pb->binders[i], avar_ref(v));
                        if (i < gb->sorts.size()) sorts.emplace(v, gb->sorts[i]);
                    }
                    Provenance origin{ses.orig, g->from, g->to, snd->label};
                    std::vector<Expr> values = snd->args;
                    State next = st;
                    next.procs[m] = snd->cont;
                    next.procs[o] = substitute(pb->cont, sub);
                    next.sessions[l].type = gb->cont;
                    return Sgp{SAssign{std::move(targets), std::move(values), map(std::move(next)), origin}};
                }
            }
        }
        return std::nullopt;
    }

    // Sessions a process belongs to, by index.
    std::set<std::size_t> touched(const State& st, const Process& p) {
        std::set<std::size_t> out;
        auto used = sessions_used(p);
        for (std::size_t j = 0; j < st.sessions.size(); ++j) {
            const Session& s = st.sessions[j];
            if (s.initialized ? used.count(s.name) > 0 : touches_shared(p, s.shared)) out.insert(j);
        }
        return out;
    }

    // Case 7(a).
    std::optional<Sgp> split_sessions(State& st) {
        std::vector<std::size_t> parent(st.sessions.size());
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](std::size_t x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        std::vector<std::set<std::size_t>> per_proc;
        for (const auto& p : st.procs) {
            per_proc.push_back(touched(st, p));
            const auto& t = per_proc.back();
            for (auto j : t) parent[find(j)] = find(*t.begin());
        }
        std::map<std::size_t, std::string> least;
        for (std::size_t j = 0; j < st.sessions.size(); ++j) {
            auto r = find(j);
            if (!least.count(r) || st.sessions[j].name < least[r]) least[r] = st.sessions[j].name;
        }
        if (least.size() < 2) return std::nullopt;
        std::size_t first = std::min_element(least.begin(), least.end(), [](const auto& a, const auto& b) {
                                return a.second < b.second;
                            })->first;
        note("7a");
        State a, b;
        a.depth = b.depth = st.depth;
        a.unfolds = b.unfolds = st.unfolds;
        for (std::size_t j = 0; j < st.sessions.size(); ++j)
            (find(j) == first ? a : b).sessions.push_back(st.sessions[j]);
        for (std::size_t i = 0; i < st.procs.size(); ++i) {
            bool left = per_proc[i].empty() || find(*per_proc[i].begin()) == first;
            (left ? a : b).procs.push_back(st.procs[i]);
        }
        Sgp l = map(std::move(a));
        Sgp r = map(std::move(b));
        return Sgp{SPar{l, r}};
    }

    // Case 7(b'): split a parallel global type of an initialised session.
    bool split_type(State& st) {
        for (std::size_t k = 0; k < st.sessions.size(); ++k) {
            Session& s = st.sessions[k];
            auto par = s.type.as<GPar>();
            if (!par || !s.initialized) continue;
            note("7b");
            std::set<std::string> taken;
            for (const auto& x : st.sessions) taken.insert(x.name);
            for (const auto& p : st.procs) {
                auto fn = free_names(p);
                taken.insert(fn.begin(), fn.end());
            }
            std::string fresh;
            for (int i = 1;; ++i) {
                fresh = s.orig + "#" + std::to_string(i);
                if (!taken.count(fresh)) break;
            }
            auto right = roles(par->right);
            std::string old = s.name;
            for (auto& p : st.procs) {
                bool mine = false;
                for (const auto& a : actors(p))
                    if (a.session == old && right.count(a.role)) mine = true;
                if (mine) p = rename_session(p, old, fresh);
            }
            Session extra{par->right, fresh, s.orig, "", true};
            s.type = par->left;
            st.sessions.insert(st.sessions.begin() + static_cast<std::ptrdiff_t>(k) + 1, extra);
            return true;
        }
        return false;
    }

    // Single-session parallel split by roles.
    std::optional<Sgp> split_single(State& st) {
        auto par = st.sessions.front().type.as<GPar>();
        if (!par || !st.sessions.front().initialized) return std::nullopt;
        auto left = roles(par->left);
        State a, b;
        a.depth = b.depth = st.depth;
        a.unfolds = b.unfolds = st.unfolds;
        a.sessions = b.sessions = st.sessions;
        a.sessions.front().type = par->left;
        b.sessions.front().type = par->right;
        for (const auto& p : st.procs) {
            auto rs = roles(p);
            bool in_left = rs.empty() || std::any_of(rs.begin(), rs.end(), [&](Role r) { return left.count(r) > 0; });
            (in_left ? a : b).procs.push_back(p);
        }
        note("7");
        Sgp l = map(std::move(a));
        Sgp r = map(std::move(b));
        return Sgp{SPar{l, r}};
    }

    // Case 9.
    std::optional<Sgp> invite(State& st) {
        for (std::size_t k = 0; k < st.procs.size(); ++k) {
            auto rq = st.procs[k].as<PRequest>();
            if (!rq) continue;
            auto ses = std::find_if(st.sessions.begin(), st.sessions.end(),
                                    [&](const Session& s) { return !s.initialized && s.shared == rq->shared; });
            if (ses == st.sessions.end()) continue;
            std::vector<std::size_t> accs;
            for (std::uint32_t r = 2; r <= rq->roles; ++r) {
                for (std::size_t j = 0; j < st.procs.size(); ++j)
                    if (auto a = st.procs[j].as<PAccept>(); a && a->shared == rq->shared && a->role.id == r) {
                        accs.push_back(j);
                        break;
                    }
                if (accs.size() != r - 1) break;
            }
            if (accs.size() + 1 != rq->roles) continue;
            note("9");
            if (ses->name.empty() || ses->name == ses->shared) ses->name = rq->session;
            if (ses->orig.empty() || ses->orig == ses->shared) ses->orig = ses->name;
            ses->initialized = true;
            State next = st;
            next.procs[k] = annotate(rename_session(rq->cont, rq->session, ses->name), {ses->orig, Role{1}});
            for (std::size_t j : accs) {
                auto a = st.procs[j].as<PAccept>();
                next.procs[j] = annotate(rename_session(a->cont, a->session, ses->name), {ses->orig, a->role});
            }
            next.sessions = st.sessions;
            return tau(map(std::move(next)));
        }
        return std::nullopt;
    }

    // Case 10, preferring a conditional that guards the sender of a pending communication.
    std::optional<Sgp> branch(State& st) {
        std::optional<std::size_t> pick;
        for (std::size_t l : session_order(st)) {
            auto g = st.sessions[l].type.as<GComm>();
            if (!g) continue;
            for (std::size_t k = 0; k < st.procs.size() && !pick; ++k)
                if (st.procs[k].is<PCond>() && cond_guards_sender(st.procs[k], st.sessions[l].name, g->from)) pick = k;
            if (pick) break;
        }
        if (!pick)
            for (std::size_t k = 0; k < st.procs.size(); ++k)
                if (st.procs[k].is<PCond>()) {
                    pick = k;
                    break;
                }
        if (!pick) return std::nullopt;
        note("10");
        auto c = st.procs[*pick].as<PCond>();
        State a = st, b = st;
        a.procs[*pick] = c->then_branch;
        b.procs[*pick] = c->else_branch;
        Expr cond = c->cond;
        Sgp t = map(std::move(a));
        Sgp e = map(std::move(b));
        return Sgp{SIf{cond, t, e}};
    }

    const SeqOptions& opts_;
    std::size_t unfold_limit_;
    std::size_t depth_limit_;
    std::size_t applications_ = 0;
};

} // namespace

SeqResult sequentialize(const std::vector<Process>& procs, const std::vector<SessionBinding>& sessions,
                        const SeqOptions& opts) {
    Process whole = compose(procs);
    if (opts.check_typing) {
        TypingReport r = well_typed(whole, sessions);
        if (!r.verdict) {
            std::string why = r.failures.empty() ? "" : ": " + r.failures.front().code + ": " + r.failures.front().message;
            throw SeqError("NotWellTyped", "the input is not well-typed" + why, r.failures);
        }
    }
    State st;
    st.procs = procs;
    std::size_t type_size = 0;
    auto names = free_names(whole);
    for (const auto& b : sessions) {
        type_size += size(b.type);
        Session s{b.type, b.name, b.name, "", true};
        if (!names.count(b.name) || sessions_used(whole).count(b.name) == 0) {
            if (auto a = opener_of(whole, b.name, false)) {
                s.shared = *a;
                s.initialized = false;
            } else if (auto a2 = opener_of(whole, b.name, true)) {
                s.shared = *a2;
                s.initialized = false;
            }
        }
        st.sessions.push_back(std::move(s));
    }
    std::size_t unfold_limit = 4 * type_size + 16;
    std::size_t depth_limit = 64 * (size(whole) + type_size) + 256;
    Mapper m(opts, unfold_limit, depth_limit);
    SeqResult out{m.map(std::move(st)), {}, {}};
    out.sorts = std::move(m.sorts);
    out.cases = std::move(m.cases);
    return out;
}

Sgp map_sgp(const std::vector<Process>& procs, const std::vector<SessionBinding>& sessions, const SeqOptions& opts) {
    return sequentialize(procs, sessions, opts).program;
}

SgpSystem map_sgp_system(const Process& p, const std::vector<SessionBinding>& sessions, const Vector* init_vars,
                         const Valuation* init_values, const SeqOptions& opts) {
    SeqResult r = sequentialize({p}, sessions, opts);
    SgpSystem sys{{}, r.program};
    AnnotationInit init;
    if (init_vars) init.vars = *init_vars;
    if (init_values) init.values = *init_values;
    for (const auto& v : annotated_vars(r.program)) {
        auto it = r.sorts.find(v);
        Sort s = it == r.sorts.end() ? Sort::Int : it->second;
        Value val = initial_value(v, s, init);
        if (sort_of(val) != s)
            throw SeqError("InitSortMismatch", "initial value " + to_string(val) + " of " + render(v) + " is not " +
                                                   to_string(s));
        sys.vars[v] = val;
    }
    return sys;
}

} // namespace mpst
