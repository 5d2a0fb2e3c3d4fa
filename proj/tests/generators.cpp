#include "generators.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "mpst/projection.hpp"

namespace mpst::testing {

namespace {

using Rng = std::mt19937_64;

std::size_t pick(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }
bool chance(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

class GlobalGen {
public:
    GlobalGen(Rng& rng, const GenOptions& opts) : rng_(rng), opts_(opts) {}

    GlobalType top(std::uint32_t n) {
        std::vector<Role> all;
        for (std::uint32_t r = 1; r <= n; ++r) all.push_back(Role{r});
        if (opts_.allow_par && n >= 4 && chance(rng_, 0.15)) {
            std::vector<Role> left{all[0], all[1]}, right{all[2], all[3]};
            return GPar{comm(opts_.max_depth - 1, left, {}), comm(opts_.max_depth - 1, right, {})};
        }
        return comm(opts_.max_depth, all, {});
    }

private:
    Rng& rng_;
    const GenOptions& opts_;
    int next_var_ = 0;

    GlobalType any(int depth, const std::vector<Role>& roles, const std::vector<std::string>& vars) {
        if (depth <= 0) return !vars.empty() && chance(rng_, 0.5) ? GlobalType{GVar{vars[pick(rng_, vars.size())]}}
                                                                : end_global();
        std::size_t roll = pick(rng_, 10);
        if (roll == 0) return end_global();
        if (roll <= 2 && !vars.empty()) return GVar{vars[pick(rng_, vars.size())]};
        if (roll <= 4 && depth >= 2) {
            std::string t = "t" + std::to_string(next_var_++);
            auto inner = vars;
            inner.push_back(t);
            return GRec{t, comm(depth, roles, inner)};
        }
        return comm(depth, roles, vars);
    }

    GlobalType comm(int depth, const std::vector<Role>& roles, const std::vector<std::string>& vars) {
        std::size_t i = pick(rng_, roles.size());
        std::size_t j = pick(rng_, roles.size() - 1);
        if (j >= i) ++j;
        static const std::vector<std::string> labels{"a", "b", "c"};
        std::size_t k = 1 + pick(rng_, std::min(opts_.max_labels, labels.size()));
        std::vector<std::string> chosen = labels;
        std::shuffle(chosen.begin(), chosen.end(), rng_);
        chosen.resize(k);
        std::sort(chosen.begin(), chosen.end());
        GComm c{roles[i], roles[j], {}};
        for (const auto& l : chosen) {
            std::vector<Sort> sorts;
            if (chance(rng_, 0.6)) sorts.push_back(chance(rng_, 0.7) ? Sort::Int : Sort::Bool);
            c.branches.push_back({l, sorts, any(depth - 1, roles, vars)});
        }
        return c;
    }
};

/// Renumbers the roles of `g` to 1..n in order of first use.
GlobalType renumber(const GlobalType& g, std::map<std::uint32_t, std::uint32_t>& map) {
    auto role = [&](Role r) {
        auto it = map.find(r.id);
        if (it == map.end()) it = map.emplace(r.id, static_cast<std::uint32_t>(map.size() + 1)).first;
        return Role{it->second};
    };
    if (auto c = g.as<GComm>()) {
        GComm out{role(c->from), role(c->to), {}};
        for (const auto& b : c->branches) out.branches.push_back({b.label, b.sorts, renumber(b.cont, map)});
        return out;
    }
    if (auto p = g.as<GPar>()) {
        GlobalType l = renumber(p->left, map);
        return GPar{l, renumber(p->right, map)};
    }
    if (auto r = g.as<GRec>()) return GRec{r->var, renumber(r->body, map)};
    return g;
}

struct Scope {
    std::vector<std::string> ints;
    std::vector<std::string> bools;
};

class Implementer {
public:
    Implementer(Rng& rng, std::string session, Role self) : rng_(rng), session_(std::move(session)), self_(self) {}

    Process impl(const LocalType& l, const Scope& scope) {
        if (l.is<LEnd>()) return end_process();
        if (auto v = l.as<LVar>()) return PVar{"X" + v->var};
        if (auto r = l.as<LRec>()) return PRec{"X" + r->var, impl(r->body, scope)};
        if (auto r = l.as<LRecv>()) {
            PRecv out{session_, self_, r->peer, {}};
            for (const auto& b : r->branches) {
                Scope inner = scope;
                std::vector<std::string> binders;
                for (Sort s : b.sorts) {
                    std::string x = "x" + std::to_string(next_var_++);
                    binders.push_back(x);
                    (s == Sort::Bool ? inner.bools : inner.ints).push_back(x);
                }
                out.branches.push_back({b.label, binders, impl(b.cont, inner)});
            }
            return out;
        }
        auto s = l.as<LSend>();
        std::vector<Process> sends;
        for (const auto& b : s->branches) {
            std::vector<Expr> args;
            for (Sort sort : b.sorts) args.push_back(payload(sort, scope));
            sends.push_back(PSend{session_, self_, s->peer, b.label, args, impl(b.cont, scope)});
        }
        Process acc = sends.back();
        for (std::size_t i = sends.size() - 1; i-- > 0;) acc = PCond{guard(scope), sends[i], acc};
        return acc;
    }

private:
    Rng& rng_;
    std::string session_;
    Role self_;
    int next_var_ = 0;

    Expr payload(Sort sort, const Scope& scope) {
        if (sort == Sort::Bool) {
            if (!scope.bools.empty() && chance(rng_, 0.5)) return var_ref(scope.bools[pick(rng_, scope.bools.size())]);
            return bool_lit(chance(rng_, 0.5));
        }
        if (!scope.ints.empty() && chance(rng_, 0.5)) return var_ref(scope.ints[pick(rng_, scope.ints.size())]);
        return int_lit(static_cast<std::int64_t>(pick(rng_, 6)));
    }

    Expr guard(const Scope& scope) {
        if (!scope.bools.empty() && chance(rng_, 0.3)) return var_ref(scope.bools[pick(rng_, scope.bools.size())]);
        if (!scope.ints.empty() && chance(rng_, 0.6))
            return binary(BinOp::Gt, var_ref(scope.ints[pick(rng_, scope.ints.size())]),
                          int_lit(static_cast<std::int64_t>(pick(rng_, 4))));
        return binary(BinOp::Lt, int_lit(static_cast<std::int64_t>(pick(rng_, 4))),
                      int_lit(static_cast<std::int64_t>(pick(rng_, 4))));
    }
};

void components(const Process& p, std::vector<Process>& out) {
    if (auto q = p.as<PPar>()) {
        components(q->left, out);
        components(q->right, out);
    } else {
        out.push_back(p);
    }
}

} // namespace

std::optional<GlobalType> random_global(Rng& rng, const GenOptions& opts) {
    std::uint32_t n = 2 + static_cast<std::uint32_t>(pick(rng, std::max<std::uint32_t>(opts.max_roles, 2) - 1));
    GlobalType g = GlobalGen(rng, opts).top(n);
    std::map<std::uint32_t, std::uint32_t> map;
    g = renumber(g, map);
    if (map.size() < 2) return std::nullopt;
    return g;
}

Process canonical_impl(const GlobalType& g, Rng& rng, const std::string& shared, const std::string& session) {
    auto all = roles(g);
    auto n = static_cast<std::uint32_t>(all.size());
    std::vector<Process> actors;
    for (Role r : all) {
        Process body = Implementer(rng, session, r).impl(project(g, r), {});
        if (r.id == 1)
            actors.push_back(PRequest{shared, n, session, body});
        else
            actors.push_back(PAccept{shared, r, session, body});
    }
    Process acc = actors.back();
    for (std::size_t i = actors.size() - 1; i-- > 0;) acc = PPar{actors[i], acc};
    return acc;
}

Generated random_projectable(Rng& rng, const GenOptions& opts) {
    while (true) {
        auto g = random_global(rng, opts);
        if (!g || !projectable(*g).ok) continue;
        auto n = static_cast<std::uint32_t>(roles(*g).size());
        return {*g, n, canonical_impl(*g, rng)};
    }
}

Process congruent_variant(const Process& p) {
    std::vector<Process> parts;
    components(p, parts);
    std::reverse(parts.begin(), parts.end());
    Process acc = end_process();
    for (const auto& q : parts) acc = PPar{acc, q};
    return acc;
}

} // namespace mpst::testing
