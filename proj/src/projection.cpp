#include "mpst/projection.hpp"

#include <algorithm>

#include "visit.hpp"

namespace mpst {

using detail::overloaded;

namespace {

[[noreturn]] void merge_fail(const std::string& why) { throw ProjectionError("MergeUndefined", why); }

// A deferred merge of a loop variable with a receive: `t ⊔ R`. Holes only appear while
// the enclosing rec body is being projected and are named "%k".
struct Hole {
    std::string tvar;
    LocalType recv;
};

class Projector {
public:
    explicit Projector(Role r) : role_(r) {}

    LocalType run(const GlobalType& g) {
        LocalType l = project(g);
        if (!holes_in(l).empty()) merge_fail("cannot merge a loop with a receive outside that loop");
        return l;
    }

    LocalType merge(const LocalType& a, const LocalType& b) {
        if (alpha_equal(a, b)) return a;
        auto ha = hole_index(a);
        auto hb = hole_index(b);
        if (ha && hb) {
            if (holes_[*ha].tvar != holes_[*hb].tvar) merge_fail("merge of two different loops");
            return new_hole(holes_[*ha].tvar, merge(holes_[*ha].recv, holes_[*hb].recv));
        }
        if (ha || hb) {
            std::size_t k = ha ? *ha : *hb;
            const LocalType& other = ha ? b : a;
            if (auto v = other.as<LVar>(); v && v->var == holes_[k].tvar) return ha ? a : b;
            if (other.is<LRecv>()) return new_hole(holes_[k].tvar, merge(holes_[k].recv, other));
            merge_fail("cannot merge a loop with " + render(other));
        }
        if (auto v = scoped_var(a); v && b.is<LRecv>()) return new_hole(*v, b);
        if (auto v = scoped_var(b); v && a.is<LRecv>()) return new_hole(*v, a);
        if (a.is<LRec>() && b.is<LRecv>()) return merge(unfold_head(a), b);
        if (b.is<LRec>() && a.is<LRecv>()) return merge(a, unfold_head(b));
        auto ra = a.as<LRecv>();
        auto rb = b.as<LRecv>();
        if (!ra || !rb) merge_fail("cannot merge " + render(a) + " with " + render(b));
        if (ra->peer != rb->peer)
            merge_fail("receives from different roles " + std::to_string(ra->peer.id) + " and " +
                       std::to_string(rb->peer.id));
        LRecv out{ra->peer, {}};
        for (const auto& x : ra->branches) {
            auto it = std::find_if(rb->branches.begin(), rb->branches.end(),
                                   [&](const LBranch& y) { return y.label == x.label; });
            if (it == rb->branches.end()) {
                out.branches.push_back(x);
                continue;
            }
            if (it->sorts != x.sorts) merge_fail("label '" + x.label + "' carries different sorts");
            out.branches.push_back({x.label, x.sorts, merge(x.cont, it->cont)});
        }
        for (const auto& y : rb->branches) {
            bool seen = std::any_of(ra->branches.begin(), ra->branches.end(),
                                    [&](const LBranch& x) { return x.label == y.label; });
            if (!seen) out.branches.push_back(y);
        }
        return out;
    }

private:
    LocalType project(const GlobalType& g) {
        return std::visit(
            overloaded{
                [&](const GComm& c) -> LocalType {
                    if (c.from == c.to) throw ProjectionError("ProjectionUndefined", "a role sends to itself");
                    std::vector<LBranch> bs;
                    for (const auto& b : c.branches) bs.push_back({b.label, b.sorts, project(b.cont)});
                    if (role_ == c.from) return LSend{c.to, std::move(bs)};
                    if (role_ == c.to) return LRecv{c.from, std::move(bs)};
                    LocalType acc = bs.front().cont;
                    for (std::size_t i = 1; i < bs.size(); ++i) acc = merge(acc, bs[i].cont);
                    return acc;
                },
                [&](const GPar& p) -> LocalType {
                    bool l = roles(p.left).count(role_) > 0;
                    bool r = roles(p.right).count(role_) > 0;
                    if (l && r)
                        throw ProjectionError("ProjectionUndefined",
                                              "role " + std::to_string(role_.id) +
                                                  " occurs on both sides of a parallel composition");
                    if (l) return project(p.left);
                    if (r) return project(p.right);
                    return end_local();
                },
                [&](const GRec& r) -> LocalType {
                    scope_.push_back(r.var);
                    LocalType body = project(r.body);
                    scope_.pop_back();
                    body = resolve(r.var, body);
                    if (auto v = body.as<LVar>()) {
                        if (v->var == r.var) return end_local();
                        return body;
                    }
                    return LRec{r.var, body};
                },
                [&](const GVar& v) -> LocalType { return LVar{v.var}; },
                [&](const GEnd&) { return end_local(); },
            },
            g.node().v);
    }

    // Replaces each hole `t ⊔ R` in the body of `rec t` by `rec v. (body ⊔ R)`.
    LocalType resolve(const std::string& tvar, LocalType body) {
        const LocalType original = body;
        for (int round = 0; round < 16; ++round) {
            std::optional<std::size_t> pick;
            for (auto k : holes_in(body))
                if (holes_[k].tvar == tvar) {
                    pick = k;
                    break;
                }
            if (!pick) return body;
            const std::string hole = hole_name(*pick);
            const std::string v = tvar + "_m" + std::to_string(*pick);
            LocalType base = original;
            if (auto k = hole_index(original); k && holes_[*k].tvar == tvar) base = holes_[*k].recv;
            LocalType merged = substitute_tvar(merge(base, holes_[*pick].recv), hole, LVar{v});
            LocalType m = free_type_vars(merged).count(v) ? LocalType{LRec{v, merged}} : merged;
            body = substitute_tvar(body, hole, m);
        }
        merge_fail("loop merge does not stabilise");
    }

    LocalType new_hole(const std::string& tvar, LocalType recv) {
        for (std::size_t k = 0; k < holes_.size(); ++k)
            if (holes_[k].tvar == tvar && alpha_equal(holes_[k].recv, recv)) return LVar{hole_name(k)};
        holes_.push_back({tvar, std::move(recv)});
        return LVar{hole_name(holes_.size() - 1)};
    }

    static std::string hole_name(std::size_t k) { return "%" + std::to_string(k); }

    std::optional<std::size_t> hole_index(const LocalType& l) const {
        auto v = l.as<LVar>();
        if (!v || v->var.empty() || v->var[0] != '%') return std::nullopt;
        return std::stoul(v->var.substr(1));
    }

    std::optional<std::string> scoped_var(const LocalType& l) const {
        auto v = l.as<LVar>();
        if (!v) return std::nullopt;
        if (std::find(scope_.begin(), scope_.end(), v->var) == scope_.end()) return std::nullopt;
        return v->var;
    }

    std::vector<std::size_t> holes_in(const LocalType& l) const {
        std::vector<std::size_t> out;
        for (const auto& v : free_type_vars(l))
            if (auto k = hole_index(LVar{v})) out.push_back(*k);
        std::sort(out.begin(), out.end());
        return out;
    }

    Role role_;
    std::vector<std::string> scope_;
    std::vector<Hole> holes_;
};

} // namespace

LocalType merge(const LocalType& a, const LocalType& b) {
    Projector p(Role{0});
    return p.merge(a, b);
}

std::optional<LocalType> try_merge(const LocalType& a, const LocalType& b, std::string* why) {
    try {
        return merge(a, b);
    } catch (const ProjectionError& e) {
        if (why) *why = e.what();
        return std::nullopt;
    }
}

LocalType project(const GlobalType& g, Role r) {
    Projector p(r);
    return p.run(g);
}

std::optional<LocalType> try_project(const GlobalType& g, Role r, std::string* why) {
    try {
        return project(g, r);
    } catch (const ProjectionError& e) {
        if (why) *why = e.what();
        return std::nullopt;
    }
}

Projectability projectable(const GlobalType& g) {
    Projectability out;
    for (Role r : roles(g)) {
        std::string why;
        if (auto l = try_project(g, r, &why)) {
            out.projections.emplace(r, *l);
        } else {
            out.ok = false;
            out.diagnostics.push_back({Severity::Error, {}, "role " + std::to_string(r.id) + ": " + why,
                                       "ProjectionUndefined"});
        }
    }
    return out;
}

} // namespace mpst
