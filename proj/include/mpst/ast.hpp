#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace mpst {

/// Base for every error raised by the library. `code()` is a stable identifier.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

struct Role {
    std::uint32_t id = 0;
    friend auto operator<=>(const Role&, const Role&) = default;
};

enum class Sort { Int, Bool };

using Value = std::variant<std::int64_t, bool>;

Sort sort_of(const Value& v);
std::string to_string(Sort s);
std::string to_string(const Value& v);

/// Immutable, shared tree node handle. Copies are cheap.
template <class Node>
class Term {
public:
    template <class A>
        requires(!std::is_base_of_v<Term, std::decay_t<A>>)
    Term(A alt) : p_(std::make_shared<const Node>(Node{std::move(alt)})) {}

    const Node& node() const { return *p_; }
    template <class T>
    const T* as() const { return std::get_if<T>(&p_->v); }
    template <class T>
    bool is() const { return std::holds_alternative<T>(p_->v); }
    const void* identity() const { return p_.get(); }

private:
    std::shared_ptr<const Node> p_;
};

// ---------------------------------------------------------------- expressions

enum class UnOp { Neg, Not };
enum class BinOp { Add, Sub, Mul, Div, Mod, Lt, Le, Gt, Ge, Eq, Ne, And, Or };

/// A vector variable `base@session[role]`: the value of `base` held by one actor.
struct AnnotatedVar {
    std::string base;
    std::string session;
    Role role;
    friend auto operator<=>(const AnnotatedVar&, const AnnotatedVar&) = default;
};

struct ExprNode;
class Expr : public Term<ExprNode> {
public:
    using Term::Term;
    friend bool operator==(const Expr& a, const Expr& b);
};

struct IntLit {
    std::int64_t value;
    bool operator==(const IntLit&) const = default;
};
struct BoolLit {
    bool value;
    bool operator==(const BoolLit&) const = default;
};
struct VarRef {
    std::string name;
    bool operator==(const VarRef&) const = default;
};
struct ParamRef {
    std::string name;
    bool operator==(const ParamRef&) const = default;
};
struct AVarRef {
    AnnotatedVar var;
    bool operator==(const AVarRef&) const = default;
};
struct Unary {
    UnOp op;
    Expr arg;
    bool operator==(const Unary&) const = default;
};
struct Binary {
    BinOp op;
    Expr lhs;
    Expr rhs;
    bool operator==(const Binary&) const = default;
};

struct ExprNode {
    std::variant<IntLit, BoolLit, VarRef, ParamRef, AVarRef, Unary, Binary> v;
};

// --------------------------------------------------------------- global types

struct GlobalNode;
class GlobalType : public Term<GlobalNode> {
public:
    using Term::Term;
    friend bool operator==(const GlobalType& a, const GlobalType& b);
};

struct GBranch {
    std::string label;
    std::vector<Sort> sorts;
    GlobalType cont;
    bool operator==(const GBranch&) const = default;
};
struct GComm {
    Role from;
    Role to;
    std::vector<GBranch> branches;
    bool operator==(const GComm&) const = default;
};
struct GPar {
    GlobalType left;
    GlobalType right;
    bool operator==(const GPar&) const = default;
};
struct GRec {
    std::string var;
    GlobalType body;
    bool operator==(const GRec&) const = default;
};
struct GVar {
    std::string var;
    bool operator==(const GVar&) const = default;
};
struct GEnd {
    bool operator==(const GEnd&) const = default;
};

struct GlobalNode {
    std::variant<GComm, GPar, GRec, GVar, GEnd> v;
};

// ---------------------------------------------------------------- local types

struct LocalNode;
class LocalType : public Term<LocalNode> {
public:
    using Term::Term;
    friend bool operator==(const LocalType& a, const LocalType& b);
};

struct LBranch {
    std::string label;
    std::vector<Sort> sorts;
    LocalType cont;
    bool operator==(const LBranch&) const = default;
};
struct LSend {
    Role peer;
    std::vector<LBranch> branches;
    bool operator==(const LSend&) const = default;
};
struct LRecv {
    Role peer;
    std::vector<LBranch> branches;
    bool operator==(const LRecv&) const = default;
};
struct LRec {
    std::string var;
    LocalType body;
    bool operator==(const LRec&) const = default;
};
struct LVar {
    std::string var;
    bool operator==(const LVar&) const = default;
};
struct LEnd {
    bool operator==(const LEnd&) const = default;
};

struct LocalNode {
    std::variant<LSend, LRecv, LRec, LVar, LEnd> v;
};

// ------------------------------------------------------------------ processes

struct ProcessNode;
class Process : public Term<ProcessNode> {
public:
    using Term::Term;
    friend bool operator==(const Process& a, const Process& b);
};

/// `req a(n)(s).P`: role 1 of an n-party session on shared channel a.
struct PRequest {
    std::string shared;
    std::uint32_t roles;
    std::string session;
    Process cont;
    bool operator==(const PRequest&) const = default;
};
/// `acc a[r](s).P`
struct PAccept {
    std::string shared;
    Role role;
    std::string session;
    Process cont;
    bool operator==(const PAccept&) const = default;
};
/// `s[from->to]!label<args>.P`
struct PSend {
    std::string session;
    Role from;
    Role to;
    std::string label;
    std::vector<Expr> args;
    Process cont;
    bool operator==(const PSend&) const = default;
};
struct PBranch {
    std::string label;
    std::vector<std::string> binders;
    Process cont;
    bool operator==(const PBranch&) const = default;
};
/// `s[self<-from]?{ l(x..).P ; ... }`
struct PRecv {
    std::string session;
    Role self;
    Role from;
    std::vector<PBranch> branches;
    bool operator==(const PRecv&) const = default;
};
struct PCond {
    Expr cond;
    Process then_branch;
    Process else_branch;
    bool operator==(const PCond&) const = default;
};
struct PPar {
    Process left;
    Process right;
    bool operator==(const PPar&) const = default;
};
struct PEnd {
    bool operator==(const PEnd&) const = default;
};
struct PRestrict {
    std::string session;
    Process body;
    bool operator==(const PRestrict&) const = default;
};
struct PRec {
    std::string var;
    Process body;
    bool operator==(const PRec&) const = default;
};
struct PVar {
    std::string var;
    bool operator==(const PVar&) const = default;
};

struct ProcessNode {
    std::variant<PRequest, PAccept, PSend, PRecv, PCond, PPar, PEnd, PRestrict, PRec, PVar> v;
};

// ------------------------------------------- sequential global processes (SGP)

/// Which communication an assignment was generated from.
struct Provenance {
    std::string session;
    Role from;
    Role to;
    std::string label;
    bool operator==(const Provenance&) const = default;
};

struct SgpNode;
/// Equality is structural modulo renaming of rec variables; provenance is ignored.
class Sgp : public Term<SgpNode> {
public:
    using Term::Term;
    friend bool operator==(const Sgp& a, const Sgp& b);
};

/// Simultaneous assignment. Zero targets is the silent step `tau`.
struct SAssign {
    std::vector<AnnotatedVar> targets;
    std::vector<Expr> values;
    Sgp cont;
    std::optional<Provenance> origin;
};
struct SIf {
    Expr cond;
    Sgp then_branch;
    Sgp else_branch;
};
struct SPar {
    Sgp left;
    Sgp right;
};
struct SRec {
    std::string var;
    Sgp body;
};
struct SVar {
    std::string var;
};
struct SEnd {};

struct SgpNode {
    std::variant<SAssign, SIf, SPar, SRec, SVar, SEnd> v;
};

using Vector = std::map<AnnotatedVar, Value>;
using Valuation = std::map<std::string, Value>;

struct SgpSystem {
    Vector vars;
    Sgp program;
};

struct SessionBinding {
    GlobalType type;
    std::string name;
};

struct Actor {
    std::string session;
    Role role;
    friend auto operator<=>(const Actor&, const Actor&) = default;
};

// --------------------------------------------------------------- constructors

Expr int_lit(std::int64_t v);
Expr bool_lit(bool v);
Expr var_ref(std::string name);
Expr param_ref(std::string name);
Expr avar_ref(AnnotatedVar v);
Expr binary(BinOp op, Expr l, Expr r);
Expr value_expr(const Value& v);

Process end_process();
Sgp end_sgp();
Sgp tau(Sgp cont, std::optional<Provenance> origin = std::nullopt);
GlobalType end_global();
LocalType end_local();

// -------------------------------------------------------------------- queries

std::set<Role> roles(const GlobalType& g);
std::set<Role> roles(const LocalType& l);
/// Roles named in communication prefixes and invitations.
std::set<Role> roles(const Process& p);

std::size_t size(const Expr& e);
std::size_t size(const GlobalType& g);
std::size_t size(const LocalType& l);
std::size_t size(const Process& p);
std::size_t size(const Sgp& s);

/// Free shared channels, session channels and variables of a process.
std::set<std::string> free_names(const Process& p);
std::set<std::string> free_vars(const Expr& e);
std::set<std::string> free_vars(const Process& p);
std::set<std::string> params(const Expr& e);
std::set<std::string> params(const Process& p);
std::set<std::string> params(const Sgp& s);
std::set<std::string> free_pvars(const Process& p);
std::set<AnnotatedVar> annotated_vars(const Expr& e);
std::set<AnnotatedVar> annotated_vars(const Sgp& s);

/// Every actor s[r] occurring in p, guarded or not. Requests count as role 1.
std::set<Actor> actors(const Process& p);
std::set<std::string> sessions_used(const Process& p);

std::set<std::string> free_type_vars(const GlobalType& g);
std::set<std::string> free_type_vars(const LocalType& l);
std::set<std::string> free_svars(const Sgp& s);

/// True for `end`, `end || end`, and so on.
bool is_terminated(const GlobalType& g);

// ------------------------------------------------------------- substitutions

/// Raised when substituting would place a free variable under a binder of the same name.
class CaptureError : public Error {
public:
    explicit CaptureError(const std::string& name)
        : Error("Capture", "substitution would capture variable '" + name + "'") {}
};

Expr substitute(const Expr& e, const std::map<std::string, Expr>& vars);
Process substitute(const Process& p, const std::map<std::string, Expr>& vars);
/// Replaces free occurrences of a process variable.
Process substitute_pvar(const Process& p, const std::string& var, const Process& by);
/// Renames a free session channel.
Process rename_session(const Process& p, const std::string& from, const std::string& to);
Process unfold(const PRec& r);

GlobalType substitute_tvar(const GlobalType& g, const std::string& var, const GlobalType& by);
LocalType substitute_tvar(const LocalType& l, const std::string& var, const LocalType& by);
Sgp substitute_svar(const Sgp& s, const std::string& var, const Sgp& by);

/// Unfolds top-level recursion until the head is not `rec`.
GlobalType unfold_head(const GlobalType& g);
LocalType unfold_head(const LocalType& l);
Sgp unfold_head(const Sgp& s);

/// Expression with annotated variables read from the vector.
Expr substitute_avars(const Expr& e, const Vector& vec);

/// Equality of local types up to renaming of recursion variables.
bool alpha_equal(const LocalType& a, const LocalType& b);

} // namespace mpst
