#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mpst/ast.hpp"
#include "mpst/surface.hpp"

namespace mpst {

/// Obligation `a:<invite r>`: the process still has to join role r on shared channel a.
struct Invite {
    std::string shared;
    Role role;
    friend auto operator<=>(const Invite&, const Invite&) = default;
};

/// Session environment Δ. Entries typed `end` are never stored.
struct SessionEnv {
    std::set<Invite> invites;
    std::map<Actor, LocalType> locals;

    /// Adds or replaces an entry; `end` (after unfolding) removes it.
    void set(const Actor& a, const LocalType& l);
    bool empty() const { return invites.empty() && locals.empty(); }
    std::string key() const;
};

/// Global environment Γ.
struct GlobalEnv {
    /// Shared channels not used yet.
    std::map<std::string, GlobalType> shared;
    /// Shared channels already used, with the session they opened.
    std::map<std::string, std::pair<GlobalType, std::string>> used;
    std::map<std::string, Sort> sorts;
    std::map<std::string, SessionEnv> pvars;
};

struct RuleApplication {
    std::string rule;
    std::string subterm;
};

struct TypingReport {
    bool verdict = false;
    std::vector<RuleApplication> trace;
    std::vector<Diagnostic> failures;
};

/// Γ ⊢ p ▷ Δ by the typing rules, with Rule Res searching Δ ⇒* Δ'.
TypingReport typecheck(const GlobalEnv& gamma, const Process& p, const SessionEnv& delta);

/// One-step successors of Δ under Com' and Cut.
std::vector<SessionEnv> env_step(const SessionEnv& delta);

/// Bindings name either a session channel or a shared channel.
bool coherent(const SessionEnv& delta, const std::vector<SessionBinding>& bindings);

/// Local types equal modulo unfolding of recursion.
bool equivalent(const LocalType& a, const LocalType& b);
bool equivalent(const SessionEnv& a, const SessionEnv& b);

/// Different actors of one session sit in different parallel components.
bool role_distributed(const Process& p);

struct DepEdge {
    std::string from;
    std::string to;
    std::string witness;
};

/// Session s1 -> s2 when some thread performs an s2 action guarded by an s1 action.
struct DepGraph {
    std::set<std::string> nodes;
    std::vector<DepEdge> edges;

    bool acyclic() const;
    /// Topological order, ties broken by name. Nodes on cycles come last, by name.
    std::vector<std::string> order() const;
};

DepGraph dependency_graph(const Process& p, const std::set<std::string>& sessions);

/// Sorts of free variables and parameters, from their use: Bool where used as a
/// condition or a logical operand, Int otherwise.
std::map<std::string, Sort> infer_sorts(const Process& p);

/// Sort of an expression, or nullopt with a reason.
std::optional<Sort> sort_of(const Expr& e, const std::map<std::string, Sort>& sorts,
                            std::string* why = nullptr);

/// Synthesises Γ and Δ from the bindings and checks well-typedness.
TypingReport well_typed(const Process& p, const std::vector<SessionBinding>& sessions);

std::string to_json(const TypingReport& r);

} // namespace mpst
