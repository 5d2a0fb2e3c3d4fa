#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mpst/ast.hpp"
#include "mpst/promela.hpp"
#include "mpst/surface.hpp"

namespace mpst {

/// A state graph or run outgrew its bounds.
class BoundExceeded : public Error {
public:
    explicit BoundExceeded(const std::string& message) : Error("BoundExceeded", message) {}
};

/// mc_check on a system with parallel composition.
class UnsupportedParallel : public Error {
public:
    explicit UnsupportedParallel(const std::string& message) : Error("UnsupportedParallel", message) {}
};

/// A precondition of a check does not hold, e.g. the input is not well-typed.
class PreconditionError : public Error {
public:
    PreconditionError(const std::string& message, std::vector<Diagnostic> diags = {})
        : Error("Precondition", message), diags_(std::move(diags)) {}
    const std::vector<Diagnostic>& diagnostics() const { return diags_; }

private:
    std::vector<Diagnostic> diags_;
};

struct Bounds {
    std::size_t max_states = 100'000;
    /// Longest run followed by mc_check before giving up on finding a lasso.
    std::size_t max_depth = 100'000;
    /// Fixed parameter values.
    Valuation params;
};

enum class GraphKind { Process, Sgp };

struct StateGraph {
    struct Edge {
        std::size_t from = 0;
        std::size_t to = 0;
        std::string rule;
        std::string label;
    };
    GraphKind kind = GraphKind::Process;
    /// Canonical rendering of each node; node 0 is the root.
    std::vector<std::string> nodes;
    std::vector<Edge> edges;
    bool truncated = false;

    std::size_t size() const { return nodes.size(); }
    std::vector<std::size_t> successors(std::size_t n) const;
};

/// Breadth-first closure under step_process, nodes up to structural congruence.
StateGraph reachable(const Process& start, const Valuation& v = {}, const Bounds& b = {});
/// Breadth-first closure under step_sgp.
StateGraph reachable(const SgpSystem& start, const Valuation& v = {}, const Bounds& b = {});

struct TraceState {
    SgpSystem system;
    Valuation ghosts;
};

struct Witness {
    /// Human-readable states or steps, in run order.
    std::vector<std::string> steps;
    /// For lassos: index in `steps` (and `states`) where the cycle starts.
    std::optional<std::size_t> loop_start;
    /// mc_check counterexamples: the replayable run.
    std::vector<TraceState> states;
};

struct Verdict {
    std::string property;
    bool holds = true;
    Valuation params;
    std::optional<Witness> witness;
    std::string message;
    /// Number of states explored.
    std::size_t states = 0;
};

/// Every SGP step of a reachable state's image is matched by one process step.
Verdict check_soundness(const Process& p, const std::vector<SessionBinding>& sessions, const Bounds& b = {});

struct CompletenessReport {
    Verdict weak;
    /// One process step is always matched by exactly one SGP step.
    Verdict strict;
};

CompletenessReport check_weak_completeness(const Process& p, const std::vector<SessionBinding>& sessions,
                                           const Bounds& b = {});

/// Both clauses of weak reduction correspondence simulation for {(image(q), q)}.
Verdict check_correspondence(const Process& p, const std::vector<SessionBinding>& sessions, const Bounds& b = {});
/// As above, but the root of the process is related to `root` instead of its own image.
Verdict check_correspondence(const SgpSystem& root, const Process& p, const std::vector<SessionBinding>& sessions,
                             const Bounds& b = {});

/// Checks each formula on every run of a sequential system, one run per parameter
/// valuation in the product of `cfg.params` (merged with `b.params`). Throws
/// UnsupportedParallel, BoundExceeded.
std::vector<Verdict> mc_check(const SgpSystem& sys, const std::vector<LtlProperty>& props, const EmitConfig& cfg,
                              const Bounds& b = {});
Verdict mc_check(const SgpSystem& sys, const Formula& f, const EmitConfig& cfg, const Bounds& b = {});

/// Evaluates a formula on a lasso of states, given per-position atom valuations.
/// `atom(i, e)` is the truth of atomic expression `e` at position `i`.
bool holds_on_lasso(const Formula& f, std::size_t length, std::size_t loop_start,
                    const std::function<bool(std::size_t, const Expr&)>& atom);

std::string to_json(const Verdict& v);
std::string to_json(const std::vector<Verdict>& vs);

} // namespace mpst
