#include "mpst/verify.hpp"

#include <deque>
#include <map>
#include <set>

#include "mpst/semantics.hpp"
#include "mpst/sequentialize.hpp"
#include "visit.hpp"

namespace mpst {

using detail::overloaded;

std::vector<std::size_t> StateGraph::successors(std::size_t n) const {
    std::vector<std::size_t> out;
    for (const auto& e : edges)
        if (e.from == n) out.push_back(e.to);
    return out;
}

namespace {

std::string comm_label(const CommInfo& c) {
    return render(Provenance{c.session, c.from, c.to, c.label});
}

template <class State, class Key, class Step>
StateGraph explore(GraphKind kind, const State& start, const Bounds& b, Key key, Step step) {
    StateGraph g;
    g.kind = kind;
    std::map<std::string, std::size_t> index;
    std::vector<State> states{start};
    g.nodes.push_back(key(start));
    index[g.nodes.back()] = 0;
    for (std::size_t i = 0; i < states.size(); ++i) {
        for (auto& [next, rule, label] : step(states[i])) {
            std::string k = key(next);
            auto it = index.find(k);
            if (it == index.end()) {
                if (g.nodes.size() >= b.max_states) {
                    g.truncated = true;
                    continue;
                }
                it = index.emplace(k, g.nodes.size()).first;
                g.nodes.push_back(k);
                states.push_back(next);
            }
            g.edges.push_back({i, it->second, rule, label});
        }
    }
    return g;
}

// ---------------------------------------------------------- pair graphs

/// A process state with the names of its sessions; `open` marks sessions already linked.
struct Pair {
    AnnotatedState state;
    std::vector<std::string> names;
    std::vector<bool> open;
};

std::string pair_key(const Pair& p) {
    std::string k = state_key(p.state);
    for (std::size_t i = 0; i < p.names.size(); ++i) k += (p.open[i] ? " | =" : " | ~") + p.names[i];
    return k;
}

void shared_channels(const Process& p, std::map<std::string, std::string>& session_to_shared,
                     std::set<std::string>& shared) {
    std::visit(overloaded{
                   [&](const PRequest& x) {
                       shared.insert(x.shared);
                       session_to_shared.emplace(x.session, x.shared);
                       shared_channels(x.cont, session_to_shared, shared);
                   },
                   [&](const PAccept& x) {
                       shared.insert(x.shared);
                       session_to_shared.emplace(x.session, x.shared);
                       shared_channels(x.cont, session_to_shared, shared);
                   },
                   [&](const PSend& x) { shared_channels(x.cont, session_to_shared, shared); },
                   [&](const PRecv& x) {
                       for (const auto& b : x.branches) shared_channels(b.cont, session_to_shared, shared);
                   },
                   [&](const PCond& x) {
                       shared_channels(x.then_branch, session_to_shared, shared);
                       shared_channels(x.else_branch, session_to_shared, shared);
                   },
                   [&](const PPar& x) {
                       shared_channels(x.left, session_to_shared, shared);
                       shared_channels(x.right, session_to_shared, shared);
                   },
                   [&](const PRestrict& x) { shared_channels(x.body, session_to_shared, shared); },
                   [&](const PRec& x) { shared_channels(x.body, session_to_shared, shared); },
                   [&](const auto&) {},
               },
               p.node().v);
}

GlobalType unfold_heads(const GlobalType& g) {
    GlobalType h = unfold_head(g);
    if (auto p = h.as<GPar>()) return GPar{unfold_heads(p->left), unfold_heads(p->right)};
    return h;
}

/// Residual types of g under global-type reduction, each also with its heads unfolded.
std::vector<GlobalType> residuals(const GlobalType& g, const Bounds& b) {
    std::vector<GlobalType> todo{g};
    std::set<std::string> seen{render(g)};
    for (std::size_t i = 0; i < todo.size(); ++i)
        for (auto& s : step_global(todo[i]))
            if (seen.insert(render(s.type)).second) {
                if (todo.size() >= b.max_states)
                    throw BoundExceeded("more than " + std::to_string(b.max_states) + " residual global types");
                todo.push_back(s.type);
            }
    std::vector<GlobalType> out;
    std::set<std::string> taken;
    for (const auto& t : todo)
        for (const auto& u : {t, unfold_heads(t)})
            if (taken.insert(render(u)).second) out.push_back(u);
    return out;
}

struct Node {
    Pair pair;
    /// SGP systems of the state, one per residual typing under which it is well-typed.
    std::vector<SgpSystem> images;
    std::string error;
    std::vector<std::pair<std::size_t, std::string>> succ;
};

constexpr std::size_t kTypingCombinations = 256;

class PairGraph {
public:
    PairGraph(const Process& p, const std::vector<SessionBinding>& sessions, const Bounds& b)
        : bounds_(b), sessions_(sessions) {
        std::map<std::string, std::string> session_to_shared;
        std::set<std::string> shared;
        shared_channels(p, session_to_shared, shared);
        auto free = free_names(p);
        Pair root{{struct_normalize(p), {}}, {}, {}};
        for (const auto& s : sessions) {
            bool is_shared = shared.count(s.name) > 0;
            root.names.push_back(s.name);
            root.open.push_back(!is_shared && free.count(s.name) && !session_to_shared.count(s.name));
            auto it = session_to_shared.find(s.name);
            shared_of_.push_back(is_shared ? s.name : it == session_to_shared.end() ? "" : it->second);
            residuals_.push_back(residuals(s.type, b));
        }
        add(root);
        for (std::size_t i = 0; i < nodes.size(); ++i) expand(i);
    }

    std::vector<Node> nodes;

    /// Nodes reachable from n in zero or more steps.
    const std::vector<std::size_t>& reach(std::size_t n) {
        auto it = reach_.find(n);
        if (it != reach_.end()) return it->second;
        std::vector<std::size_t> out{n};
        std::set<std::size_t> seen{n};
        for (std::size_t i = 0; i < out.size(); ++i)
            for (const auto& [m, _] : nodes[out[i]].succ)
                if (seen.insert(m).second) out.push_back(m);
        return reach_[n] = std::move(out);
    }

private:
    const Bounds& bounds_;
    std::vector<SessionBinding> sessions_;
    std::vector<std::string> shared_of_;
    std::vector<std::vector<GlobalType>> residuals_;
    std::map<std::string, std::size_t> index_;
    std::map<std::size_t, std::vector<std::size_t>> reach_;

    std::size_t add(const Pair& p) {
        std::string k = pair_key(p);
        auto it = index_.find(k);
        if (it != index_.end()) return it->second;
        if (nodes.size() >= bounds_.max_states)
            throw BoundExceeded("more than " + std::to_string(bounds_.max_states) + " process states");
        index_[k] = nodes.size();
        Node n{p, {}, "", {}};
        bool root = nodes.empty();
        map_images(n, root, !root);
        nodes.push_back(std::move(n));
        return nodes.size() - 1;
    }

    /// The root is mapped with the given types only; later states try every residual typing,
    /// first requiring loops to be aligned.
    void map_images(Node& n, bool root, bool align) {
        const Pair& p = n.pair;
        std::set<std::string> open;
        for (std::size_t i = 0; i < p.names.size(); ++i)
            if (p.open[i]) open.insert(p.names[i]);
        Process body = p.state.process;
        while (auto r = body.as<PRestrict>()) {
            if (!open.count(r->session)) break;
            body = r->body;
        }
        std::vector<std::vector<GlobalType>> choices;
        for (std::size_t i = 0; i < sessions_.size(); ++i) {
            if (root || !p.open[i])
                choices.push_back({sessions_[i].type});
            else
                choices.push_back(residuals_[i]);
        }
        std::set<std::string> seen;
        std::vector<std::size_t> pick(choices.size(), 0);
        for (std::size_t count = 0; count < kTypingCombinations; ++count) {
            std::vector<SessionBinding> typing;
            for (std::size_t i = 0; i < choices.size(); ++i) typing.push_back({choices[i][pick[i]], p.names[i]});
            try {
                SeqOptions opts;
                opts.align_loops = align;
                SgpSystem sys = map_sgp_system(body, typing, &p.state.store, nullptr, opts);
                for (const auto& [v, val] : p.state.store) sys.vars.emplace(v, val);
                if (seen.insert(render(sys)).second) n.images.push_back(std::move(sys));
            } catch (const SeqError& e) {
                if (n.error.empty()) n.error = e.code() + ": " + e.what();
            }
            std::size_t k = 0;
            while (k < pick.size() && ++pick[k] == choices[k].size()) pick[k++] = 0;
            if (k == pick.size()) break;
        }
    }

    void expand(std::size_t i) {
        Pair cur = nodes[i].pair;
        for (auto& s : step_annotated(cur.state, bounds_.params)) {
            std::vector<std::pair<Pair, std::string>> next;
            if (s.rule == "Link" && s.link) {
                for (std::size_t k = 0; k < cur.names.size(); ++k) {
                    if (cur.open[k] || shared_of_[k] != s.link->shared) continue;
                    Pair n{s.state, cur.names, cur.open};
                    n.names[k] = s.link->session;
                    n.open[k] = true;
                    next.push_back({n, "Link " + s.link->shared + "(" + s.link->session + ")"});
                }
            }
            std::string label = s.comm ? "Com " + comm_label(*s.comm) : s.rule;
            if (next.empty()) next.push_back({Pair{s.state, cur.names, cur.open}, label});
            for (auto& [n, l] : next) {
                std::size_t j = add(n);
                nodes[i].succ.push_back({j, l});
            }
        }
    }
};

/// Equality of SGP systems up to equivalence of programs; vectors must agree where both are defined.
class Equiv {
public:
    bool operator()(const SgpSystem& a, const SgpSystem& b) {
        for (const auto& [v, val] : a.vars) {
            auto it = b.vars.find(v);
            if (it != b.vars.end() && it->second != val) return false;
        }
        std::string ka = render(a.program), kb = render(b.program);
        if (ka == kb) return true;
        auto key = std::make_pair(ka, kb);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        return cache_[key] = sgp_equiv(a.program, b.program);
    }

private:
    std::map<std::pair<std::string, std::string>, bool> cache_;
};

std::vector<SgpSystem> sgp_reach(const SgpSystem& s, const Bounds& b) {
    std::vector<SgpSystem> out{s};
    std::set<std::string> seen{render(s)};
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (auto& n : step_sgp(out[i], b.params)) {
            if (!seen.insert(render(n.state)).second) continue;
            if (out.size() >= b.max_states)
                throw BoundExceeded("more than " + std::to_string(b.max_states) + " SGP states");
            out.push_back(std::move(n.state));
        }
    }
    return out;
}

std::string describe(const Node& n) {
    std::string s = render(n.pair.state.process);
    if (!n.pair.state.store.empty()) s += " with " + render(n.pair.state.store);
    return s;
}

std::string describe(const SgpSystem& s) { return render(s); }

struct Checker {
    PairGraph graph;
    const Bounds& bounds;
    Equiv eq;
    std::optional<SgpSystem> root_override;
    std::map<std::string, std::vector<SgpSystem>> reach_cache;

    Checker(const Process& p, const std::vector<SessionBinding>& sessions, const Bounds& b)
        : graph(p, sessions, b), bounds(b) {
        if (graph.nodes[0].images.empty())
            throw PreconditionError("the system is not well-typed: " + graph.nodes[0].error);
    }

    const std::vector<SgpSystem>& images(std::size_t n) const {
        static const std::vector<SgpSystem> none;
        if (n == 0 && root_override) return root_images_;
        return graph.nodes[n].images;
    }

    void set_root(const SgpSystem& s) {
        root_override = s;
        root_images_ = {s};
    }

    const std::vector<SgpSystem>& sgp_reach_of(const SgpSystem& s) {
        std::string k = render(s);
        auto it = reach_cache.find(k);
        if (it != reach_cache.end()) return it->second;
        return reach_cache[k] = sgp_reach(s, bounds);
    }

    bool matches(std::size_t n, const SgpSystem& s) {
        for (const auto& img : images(n))
            if (eq(img, s)) return true;
        return false;
    }

    Verdict verdict(const std::string& name) const {
        Verdict v;
        v.property = name;
        v.params = bounds.params;
        v.states = graph.nodes.size();
        return v;
    }

    static void fail(Verdict& v, std::string message, std::vector<std::string> steps) {
        v.holds = false;
        v.message = std::move(message);
        v.witness = Witness{std::move(steps), std::nullopt, {}};
    }

    Verdict soundness() {
        Verdict v = verdict("soundness");
        std::vector<std::pair<std::size_t, SgpSystem>> todo{{0, images(0).front()}};
        std::set<std::string> seen{"0 " + render(todo.front().second)};
        for (std::size_t q = 0; q < todo.size() && v.holds; ++q) {
            auto [i, img] = todo[q];
            for (auto& s : step_sgp(img, bounds.params)) {
                bool matched = false;
                for (const auto& [j, _] : graph.nodes[i].succ)
                    for (const auto& next : images(j)) {
                        if (!eq(next, s.state)) continue;
                        matched = true;
                        if (seen.insert(std::to_string(j) + " " + render(next)).second) todo.push_back({j, next});
                    }
                if (!matched) {
                    fail(v, "an SGP step has no matching process step",
                         {describe(graph.nodes[i]), describe(img), s.rule + " -> " + describe(s.state)});
                    break;
                }
            }
        }
        if (v.holds) v.message = "every SGP step is matched by a process step";
        return v;
    }

    Verdict strict_completeness() {
        Verdict v = verdict("strict completeness");
        for (std::size_t i = 0; i < graph.nodes.size() && v.holds; ++i) {
            for (const auto& img : images(i)) {
                auto steps = step_sgp(img, bounds.params);
                for (const auto& [j, label] : graph.nodes[i].succ) {
                    bool matched = false;
                    for (const auto& s : steps)
                        if (matches(j, s.state)) {
                            matched = true;
                            break;
                        }
                    if (!matched) {
                        fail(v, "a process step is not matched by a single SGP step",
                             {describe(graph.nodes[i]), label + " -> " + describe(graph.nodes[j]), describe(img)});
                        break;
                    }
                }
                if (!v.holds) break;
            }
        }
        if (v.holds) v.message = "every process step is matched by one SGP step";
        return v;
    }

    /// Some state after j is an image the SGP system `from` can reach.
    bool completes(const SgpSystem& from, std::size_t j) {
        const auto& targets = sgp_reach_of(from);
        for (std::size_t k : graph.reach(j))
            for (const auto& t : targets)
                if (matches(k, t)) return true;
        return false;
    }

    Verdict weak_completeness() {
        Verdict v = verdict("weak completeness");
        for (std::size_t i = 0; i < graph.nodes.size() && v.holds; ++i)
            for (const auto& img : images(i)) {
                for (const auto& [j, label] : graph.nodes[i].succ)
                    if (!completes(img, j)) {
                        fail(v, "a process step cannot be completed to a state matched by the SGP system",
                             {describe(graph.nodes[i]), label + " -> " + describe(graph.nodes[j]), describe(img)});
                        break;
                    }
                if (!v.holds) break;
            }
        if (v.holds) v.message = "every process step completes to a matched state";
        return v;
    }

    Verdict correspondence() {
        Verdict v = verdict("correspondence");
        for (std::size_t i = 0; i < graph.nodes.size() && v.holds; ++i) {
            for (const auto& img : images(i)) {
                for (auto& s : step_sgp(img, bounds.params)) {
                    bool matched = false;
                    for (std::size_t k : graph.reach(i))
                        if (matches(k, s.state)) {
                            matched = true;
                            break;
                        }
                    if (!matched) {
                        fail(v, "an SGP step is not simulated by the process",
                             {describe(graph.nodes[i]), describe(img), s.rule + " -> " + describe(s.state)});
                        break;
                    }
                }
                if (!v.holds) break;
                for (const auto& [j, label] : graph.nodes[i].succ)
                    if (!completes(img, j)) {
                        fail(v, "a process step is not simulated by the SGP system",
                             {describe(graph.nodes[i]), label + " -> " + describe(graph.nodes[j]), describe(img)});
                        break;
                    }
                if (!v.holds) break;
            }
        }
        if (v.holds) v.message = "both simulation clauses hold";
        return v;
    }

private:
    std::vector<SgpSystem> root_images_;
};

} // namespace

StateGraph reachable(const Process& start, const Valuation& v, const Bounds& b) {
    using Step = std::tuple<Process, std::string, std::string>;
    return explore(
        GraphKind::Process, struct_normalize(start), b, [](const Process& p) { return render(p); },
        [&](const Process& p) {
            std::vector<Step> out;
            for (auto& s : step_process(p, v)) {
                std::string label = s.comm ? comm_label(*s.comm) : s.link ? s.link->shared + "(" + s.link->session + ")" : "";
                out.emplace_back(s.term, s.rule, label);
            }
            return out;
        });
}

StateGraph reachable(const SgpSystem& start, const Valuation& v, const Bounds& b) {
    using Step = std::tuple<SgpSystem, std::string, std::string>;
    return explore(
        GraphKind::Sgp, start, b, [](const SgpSystem& s) { return render(s); },
        [&](const SgpSystem& s) {
            std::vector<Step> out;
            for (auto& n : step_sgp(s, v)) out.emplace_back(n.state, n.rule, n.origin ? render(*n.origin) : "");
            return out;
        });
}

Verdict check_soundness(const Process& p, const std::vector<SessionBinding>& sessions, const Bounds& b) {
    return Checker(p, sessions, b).soundness();
}

CompletenessReport check_weak_completeness(const Process& p, const std::vector<SessionBinding>& sessions,
                                           const Bounds& b) {
    Checker c(p, sessions, b);
    CompletenessReport r{c.weak_completeness(), c.strict_completeness()};
    return r;
}

Verdict check_correspondence(const Process& p, const std::vector<SessionBinding>& sessions, const Bounds& b) {
    return Checker(p, sessions, b).correspondence();
}

Verdict check_correspondence(const SgpSystem& root, const Process& p, const std::vector<SessionBinding>& sessions,
                             const Bounds& b) {
    Checker c(p, sessions, b);
    c.set_root(root);
    return c.correspondence();
}

} // namespace mpst
