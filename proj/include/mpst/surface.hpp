#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mpst/ast.hpp"

namespace mpst {

struct Span {
    std::size_t line = 0;
    std::size_t col = 0;
    std::size_t len = 0;
};

enum class Severity { Error, Warning };

struct Diagnostic {
    Severity severity = Severity::Error;
    Span span;
    std::string message;
    std::string code;
};

std::string to_string(const Diagnostic& d);

/// Result of a parse: a value, or the diagnostics explaining why there is none.
template <class T>
struct Parsed {
    std::optional<T> value;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return value.has_value(); }
    const T& operator*() const { return *value; }
    const T* operator->() const { return &*value; }
};

class ParseError : public Error {
public:
    explicit ParseError(std::vector<Diagnostic> diags);
    const std::vector<Diagnostic>& diagnostics() const { return diags_; }

private:
    std::vector<Diagnostic> diags_;
};

/// Returns the value or throws ParseError.
template <class T>
T value_or_throw(Parsed<T> p) {
    if (!p.ok()) throw ParseError(std::move(p.diagnostics));
    return std::move(*p.value);
}

// ------------------------------------------------------------------ formulas

struct FormulaNode;
class Formula : public Term<FormulaNode> {
public:
    using Term::Term;
};

struct FAtom {
    Expr expr;
};
struct FNot {
    Formula arg;
};
struct FAnd {
    Formula lhs, rhs;
};
struct FOr {
    Formula lhs, rhs;
};
struct FImplies {
    Formula lhs, rhs;
};
struct FAlways {
    Formula arg;
};
struct FEventually {
    Formula arg;
};
struct FUntil {
    Formula lhs, rhs;
};

struct FormulaNode {
    std::variant<FAtom, FNot, FAnd, FOr, FImplies, FAlways, FEventually, FUntil> v;
};

// -------------------------------------------------------------------- config

struct ParamDomain {
    std::string name;
    std::int64_t lo = 0;
    std::int64_t hi = 0;
};

struct GhostTrigger {
    Provenance on;
    Expr value;
};

/// Verification-only variable updated right after matching assignments.
struct Ghost {
    std::string name;
    Sort sort = Sort::Int;
    Value init = std::int64_t{0};
    std::vector<GhostTrigger> triggers;
};

struct LtlProperty {
    std::string name;
    std::string text;
    Formula formula;
};

struct Config {
    std::vector<ParamDomain> params;
    std::vector<Ghost> ghosts;
    std::vector<LtlProperty> ltl;
    /// `init x@s[r] = v` lines.
    Vector init_vars;
    /// `init x = v` lines: values for parameters and free actor variables.
    Valuation init_values;

    const LtlProperty* find_ltl(const std::string& name) const;
};

// ------------------------------------------------------------------- parsers

Parsed<Expr> parse_expr(std::string_view text, const std::set<std::string>& params = {});
Parsed<GlobalType> parse_global_type(std::string_view text);
Parsed<LocalType> parse_local_type(std::string_view text);
/// Accepts an optional `params a, b;` header; declared names become ParamRef.
Parsed<Process> parse_process(std::string_view text, const std::set<std::string>& params = {});
/// Bare identifiers are parameters; vector variables are written `x@s[r]`.
Parsed<Sgp> parse_sgp(std::string_view text);
/// SGP text with an optional `vars x@s[r] = v, ...;` header. Unlisted variables start at 0.
Parsed<SgpSystem> parse_sgp_system(std::string_view text);
Parsed<Formula> parse_formula(std::string_view text);
Parsed<Config> parse_config(std::string_view text);

/// Parameter names declared in a process file header.
std::set<std::string> declared_params(std::string_view process_text);

// ----------------------------------------------------------------- renderers

std::string render(const Expr& e);
std::string render(const GlobalType& g);
std::string render(const LocalType& l);
std::string render(const Process& p);
std::string render(const Sgp& s, bool with_provenance = false);
std::string render(const SgpSystem& sys, bool with_provenance = true);
std::string render(const Formula& f);
std::string render(const AnnotatedVar& v);
std::string render(const Vector& v);
std::string render(const Provenance& p);

} // namespace mpst
