#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mpst/ast.hpp"

namespace mpst {

/// `code()` is "DivisionByZero", "Overflow" or "UnboundSymbol".
class EvalError : public Error {
public:
    using Error::Error;
};

/// A conditional or an assignment whose expression cannot be evaluated.
class StuckEvaluation : public Error {
public:
    StuckEvaluation(const std::string& cause, const std::string& message)
        : Error("StuckEvaluation", message), cause_(cause) {}
    const std::string& cause() const { return cause_; }

private:
    std::string cause_;
};

/// Variables and parameters are both looked up by name in `v`.
Value eval_expr(const Expr& e, const Valuation& v);
/// Annotated variables are read from `vec`, everything else from `params`.
Value eval_expr(const Expr& e, const Vector& vec, const Valuation& params);

/// Canonical representative of the structural congruence class.
Process struct_normalize(const Process& p);

struct CommInfo {
    std::string session;
    Role from;
    Role to;
    std::string label;
    std::vector<Value> values;
};

struct LinkInfo {
    std::string shared;
    std::string session;
};

struct ProcessSuccessor {
    Process term;
    /// Link, Com, IfT or IfF.
    std::string rule;
    std::optional<CommInfo> comm;
    std::optional<LinkInfo> link;
};

/// One-step successors, normalized and duplicate-free. Throws StuckEvaluation.
std::vector<ProcessSuccessor> step_process(const Process& p, const Valuation& v);

/// Process whose received values live in a store of vector variables: a receive by
/// s[r] of x writes x@s[r] and the continuation reads x@s[r].
struct AnnotatedState {
    Process process;
    Vector store;
};

/// Start values of actor variables annotated when an actor joins a session.
struct AnnotationInit {
    Vector vars;
    Valuation values;
};

struct AnnotatedSuccessor {
    AnnotatedState state;
    std::string rule;
    std::optional<CommInfo> comm;
    std::optional<LinkInfo> link;
};

std::vector<AnnotatedSuccessor> step_annotated(const AnnotatedState& s, const Valuation& params,
                                               const AnnotationInit& init = {});

/// Replaces the free variables of an actor's code by the actor's vector variables.
Process annotate_actor(const Process& p, const Actor& a);
/// Start value of `x@s[r]`: `vars`, then `values[x]`, then zero of the given sort.
Value initial_value(const AnnotatedVar& v, Sort sort, const AnnotationInit& init);

std::string state_key(const AnnotatedState& s);

struct GlobalSuccessor {
    GlobalType type;
    Role from;
    Role to;
    std::string label;
};

/// Steps of a global type: a top-level communication picks a branch, parallel sides step alone.
std::vector<GlobalSuccessor> step_global(const GlobalType& g);

struct SgpSuccessor {
    SgpSystem state;
    /// Ass, IfT or IfF.
    std::string rule;
    std::optional<Provenance> origin;
    std::vector<AnnotatedVar> written;
};

/// Steps of an SGP system. Throws StuckEvaluation.
std::vector<SgpSuccessor> step_sgp(const SgpSystem& sys, const Valuation& params);

/// Drops terminated parallel sides and unfolds recursion at the head.
Sgp sgp_head(const Sgp& s);

/// Structural equivalence of SGP processes modulo unfolding and parallel laws.
bool sgp_equiv(const Sgp& a, const Sgp& b);
bool sgp_equiv(const SgpSystem& a, const SgpSystem& b);

} // namespace mpst
