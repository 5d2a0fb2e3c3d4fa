#include "mpst/surface.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <limits>
#include <sstream>

#include "visit.hpp"

namespace mpst {

using detail::overloaded;

std::string to_string(const Diagnostic& d) {
    std::ostringstream os;
    os << d.span.line << ':' << d.span.col << ": "
       << (d.severity == Severity::Error ? "error" : "warning") << " [" << d.code << "] "
       << d.message;
    return os.str();
}

namespace {

std::string join_diagnostics(const std::vector<Diagnostic>& diags) {
    std::string out;
    for (const auto& d : diags) {
        if (!out.empty()) out += "\n";
        out += to_string(d);
    }
    return out.empty() ? "parse error" : out;
}

} // namespace

ParseError::ParseError(std::vector<Diagnostic> diags)
    : Error("Parse", join_diagnostics(diags)), diags_(std::move(diags)) {}

const LtlProperty* Config::find_ltl(const std::string& name) const {
    for (const auto& l : ltl)
        if (l.name == name) return &l;
    return nullptr;
}

// ===================================================================== lexer

namespace {

constexpr int kMaxDepth = 2000;

enum class Tok { Ident, Int, Sym, Eof };

struct Token {
    Tok kind = Tok::Eof;
    std::string text;
    Span span;
};

struct Abort {};

class Lexer {
public:
    Lexer(std::string_view text, std::vector<Diagnostic>& diags, std::size_t first_line = 1)
        : text_(text), diags_(diags), line_(first_line) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_space();
            Span sp{line_, col_, 0};
            if (pos_ >= text_.size()) {
                out.push_back({Tok::Eof, "", sp});
                return out;
            }
            char c = text_[pos_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t start = pos_;
                while (pos_ < text_.size() &&
                       (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                    advance();
                sp.len = pos_ - start;
                out.push_back({Tok::Ident, std::string(text_.substr(start, sp.len)), sp});
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c))) {
                std::size_t start = pos_;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    advance();
                sp.len = pos_ - start;
                out.push_back({Tok::Int, std::string(text_.substr(start, sp.len)), sp});
                continue;
            }
            static const char* syms[] = {"||", "&&", "->", "<-", "<=", ">=", "==", "!=", ":=",
                                         "[]", "<>", "..", "|",  "!",  "?",  ":",  ";",  ",",
                                         ".",  "(",  ")",  "{",  "}",  "[",  "]",  "<",  ">",
                                         "=",  "+",  "-",  "*",  "/",  "%",  "@"};
            bool matched = false;
            for (const char* s : syms) {
                std::string_view sv(s);
                if (text_.substr(pos_, sv.size()) == sv) {
                    for (std::size_t i = 0; i < sv.size(); ++i) advance();
                    sp.len = sv.size();
                    out.push_back({Tok::Sym, std::string(sv), sp});
                    matched = true;
                    break;
                }
            }
            if (matched) continue;
            sp.len = 1;
            diags_.push_back({Severity::Error, sp,
                              std::string("unexpected character '") +
                                  (std::isprint(static_cast<unsigned char>(c)) ? std::string(1, c)
                                                                              : std::string("\\x")) +
                                  "'",
                              "syntax"});
            throw Abort{};
        }
    }

private:
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_space() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else if (c == '#' || (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/')) {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else {
                break;
            }
        }
    }

    std::string_view text_;
    std::vector<Diagnostic>& diags_;
    std::size_t pos_ = 0;
    std::size_t line_;
    std::size_t col_ = 1;
};

// ==================================================================== parser

class Parser {
public:
    Parser(std::vector<Token> toks, std::vector<Diagnostic>& diags)
        : toks_(std::move(toks)), diags_(diags) {}

    // --------------------------------------------------------------- helpers

    const Token& peek(std::size_t k = 0) const {
        return toks_[std::min(pos_ + k, toks_.size() - 1)];
    }
    bool at_sym(std::string_view s, std::size_t k = 0) const {
        return peek(k).kind == Tok::Sym && peek(k).text == s;
    }
    bool at_kw(std::string_view s, std::size_t k = 0) const {
        return peek(k).kind == Tok::Ident && peek(k).text == s;
    }
    bool at_eof() const { return peek().kind == Tok::Eof; }
    Token next() {
        Token t = peek();
        if (pos_ < toks_.size() - 1) ++pos_;
        return t;
    }
    bool accept_sym(std::string_view s) {
        if (!at_sym(s)) return false;
        next();
        return true;
    }
    bool accept_kw(std::string_view s) {
        if (!at_kw(s)) return false;
        next();
        return true;
    }

    [[noreturn]] void fail(const Span& sp, const std::string& msg, const std::string& code = "syntax") {
        diags_.push_back({Severity::Error, sp, msg, code});
        throw Abort{};
    }
    void report(const Span& sp, const std::string& msg, const std::string& code) {
        diags_.push_back({Severity::Error, sp, msg, code});
    }

    std::string describe(const Token& t) const {
        if (t.kind == Tok::Eof) return "end of input";
        return "'" + t.text + "'";
    }

    void expect_sym(std::string_view s) {
        if (!accept_sym(s)) fail(peek().span, "expected '" + std::string(s) + "' but found " + describe(peek()));
    }
    void expect_kw(std::string_view s) {
        if (!accept_kw(s)) fail(peek().span, "expected '" + std::string(s) + "' but found " + describe(peek()));
    }
    void expect_eof() {
        if (!at_eof()) fail(peek().span, "unexpected " + describe(peek()));
    }

    std::string ident(const char* what) {
        if (peek().kind != Tok::Ident) fail(peek().span, std::string("expected ") + what + " but found " + describe(peek()));
        return next().text;
    }

    std::int64_t integer(const char* what) {
        if (peek().kind != Tok::Int) fail(peek().span, std::string("expected ") + what + " but found " + describe(peek()));
        Token t = next();
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc()) fail(t.span, "integer literal out of range", "integer-overflow");
        return v;
    }

    Role role() {
        Span sp = peek().span;
        std::int64_t v = integer("role number");
        if (v < 1 || v > std::numeric_limits<std::uint32_t>::max())
            fail(sp, "roles are numbered from 1", "bad-role");
        return Role{static_cast<std::uint32_t>(v)};
    }

    struct DepthGuard {
        Parser& p;
        DepthGuard(Parser& parser, const Span& sp) : p(parser) {
            if (++p.depth_ > kMaxDepth) p.fail(sp, "nesting too deep", "depth-limit");
        }
        ~DepthGuard() { --p.depth_; }
    };

    // ----------------------------------------------------------- expressions

    enum class Names { Process, Sgp, Free };

    struct ExprMode {
        Names names = Names::Free;
        bool no_gt = false;
    };

    std::set<std::string> params;
    std::vector<std::string> bound_vars;

    Expr expr(ExprMode m) { return expr_or(m); }

    Expr expr_or(ExprMode m) {
        DepthGuard g(*this, peek().span);
        Expr l = expr_and(m);
        while (at_sym("||")) {
            check_chain();
            next();
            l = binary(BinOp::Or, l, expr_and(m));
        }
        return l;
    }

    Expr expr_and(ExprMode m) {
        Expr l = expr_cmp(m);
        while (at_sym("&&")) {
            check_chain();
            next();
            l = binary(BinOp::And, l, expr_cmp(m));
        }
        return l;
    }

    // Left-associative chains build deep trees without parser recursion; count them too.
    void check_chain() {
        if (++chain_ > kMaxDepth) fail(peek().span, "expression too long", "depth-limit");
    }

    std::optional<BinOp> relop(bool no_gt) const {
        if (peek().kind != Tok::Sym) return std::nullopt;
        const auto& t = peek().text;
        if (t == "<") return BinOp::Lt;
        if (t == "<=") return BinOp::Le;
        if (t == ">" && !no_gt) return BinOp::Gt;
        if (t == ">=" && !no_gt) return BinOp::Ge;
        if (t == "==") return BinOp::Eq;
        if (t == "!=") return BinOp::Ne;
        return std::nullopt;
    }

    Expr expr_cmp(ExprMode m) {
        Expr l = expr_add(m);
        if (auto op = relop(m.no_gt)) {
            next();
            Expr r = expr_add(m);
            if (relop(m.no_gt)) fail(peek().span, "comparison operators do not chain; add parentheses");
            return binary(*op, l, r);
        }
        return l;
    }

    Expr expr_add(ExprMode m) {
        Expr l = expr_mul(m);
        while (at_sym("+") || at_sym("-")) {
            check_chain();
            BinOp op = next().text == "+" ? BinOp::Add : BinOp::Sub;
            l = binary(op, l, expr_mul(m));
        }
        return l;
    }

    Expr expr_mul(ExprMode m) {
        Expr l = expr_unary(m);
        while (at_sym("*") || at_sym("/") || at_sym("%")) {
            check_chain();
            auto t = next().text;
            BinOp op = t == "*" ? BinOp::Mul : t == "/" ? BinOp::Div : BinOp::Mod;
            l = binary(op, l, expr_unary(m));
        }
        return l;
    }

    Expr expr_unary(ExprMode m) {
        DepthGuard g(*this, peek().span);
        if (accept_sym("!")) return Unary{UnOp::Not, expr_unary(m)};
        if (at_sym("-")) {
            next();
            if (peek().kind == Tok::Int) {
                Token t = next();
                // Parse as unsigned so that the most negative value is representable.
                std::uint64_t u = 0;
                auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), u);
                constexpr auto limit =
                    static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()) + 1;
                if (ec != std::errc() || u > limit)
                    fail(t.span, "integer literal out of range", "integer-overflow");
                if (u == limit) return int_lit(std::numeric_limits<std::int64_t>::min());
                return int_lit(-static_cast<std::int64_t>(u));
            }
            return Unary{UnOp::Neg, expr_unary(m)};
        }
        return expr_atom(m);
    }

    AnnotatedVar annotated_tail(std::string base) {
        expect_sym("@");
        std::string session = ident("session name");
        expect_sym("[");
        Role r = role();
        expect_sym("]");
        return AnnotatedVar{std::move(base), std::move(session), r};
    }

    Expr expr_atom(ExprMode m) {
        if (peek().kind == Tok::Int) return int_lit(integer("integer"));
        if (accept_kw("true")) return bool_lit(true);
        if (accept_kw("false")) return bool_lit(false);
        if (at_sym("(")) {
            next();
            ExprMode inner = m;
            inner.no_gt = false;
            Expr e = expr(inner);
            expect_sym(")");
            return e;
        }
        if (peek().kind == Tok::Ident) {
            Token t = next();
            if (at_sym("@")) return avar_ref(annotated_tail(t.text));
            switch (m.names) {
                case Names::Sgp:
                    return param_ref(t.text);
                case Names::Process: {
                    bool bound = std::find(bound_vars.begin(), bound_vars.end(), t.text) != bound_vars.end();
                    if (!bound && params.count(t.text)) return param_ref(t.text);
                    return var_ref(t.text);
                }
                case Names::Free:
                    if (params.count(t.text)) return param_ref(t.text);
                    return var_ref(t.text);
            }
        }
        fail(peek().span, "expected an expression but found " + describe(peek()));
    }

    // ---------------------------------------------------------- global types

    struct ScopeEntry {
        std::string name;
        bool guarded;
    };
    std::vector<ScopeEntry> scope;
    std::set<std::string> rec_vars;

    void mark_guarded() {
        for (auto& e : scope) e.guarded = true;
    }

    void use_var(const Token& t, const char* kind_unbound, const char* kind_unguarded) {
        for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
            if (it->name == t.text) {
                if (!it->guarded)
                    report(t.span, "variable '" + t.text + "' is not guarded by a communication", kind_unguarded);
                return;
            }
        }
        report(t.span, "variable '" + t.text + "' is not bound", kind_unbound);
    }

    void bind_rec(const Token& t, const char* kind) {
        if (!rec_vars.insert(t.text).second)
            report(t.span, "recursion variable '" + t.text + "' is bound twice", kind);
        scope.push_back({t.text, false});
    }

    std::vector<Sort> sorts() {
        std::vector<Sort> out;
        if (!accept_sym("(")) return out;
        if (accept_sym(")")) return out;
        do {
            Token t = peek();
            std::string s = ident("sort");
            if (s == "Int") out.push_back(Sort::Int);
            else if (s == "Bool") out.push_back(Sort::Bool);
            else fail(t.span, "unknown sort '" + s + "' (expected Int or Bool)", "unknown-sort");
        } while (accept_sym(","));
        expect_sym(")");
        return out;
    }

    GlobalType global_par() {
        DepthGuard g(*this, peek().span);
        GlobalType l = global_prim();
        while (accept_sym("||")) {
            check_chain();
            l = GPar{l, global_prim()};
        }
        return l;
    }

    GlobalType global_prim() {
        DepthGuard g(*this, peek().span);
        if (accept_sym("(")) {
            GlobalType t = global_par();
            expect_sym(")");
            return t;
        }
        if (accept_kw("end")) return end_global();
        if (at_kw("rec")) {
            next();
            Token v = peek();
            ident("type variable");
            expect_sym(".");
            bind_rec(v, "duplicate-rec-var");
            GlobalType body = global_prim();
            scope.pop_back();
            return GRec{v.text, body};
        }
        if (peek().kind == Tok::Int) {
            Token start = peek();
            Role from = role();
            expect_sym("->");
            Role to = role();
            expect_sym(":");
            if (from == to) report(start.span, "a role cannot communicate with itself", "self-communication");
            auto saved = scope;
            mark_guarded();
            GComm c{from, to, {}};
            std::set<std::string> labels;
            auto branch = [&] {
                Token lt = peek();
                std::string label = ident("label");
                if (!labels.insert(label).second)
                    report(lt.span, "duplicate label '" + label + "'", "duplicate-label");
                auto ss = sorts();
                expect_sym(".");
                c.branches.push_back({label, ss, global_prim()});
            };
            if (accept_sym("{")) {
                branch();
                while (accept_sym(";")) branch();
                expect_sym("}");
            } else {
                branch();
            }
            scope = saved;
            return c;
        }
        if (peek().kind == Tok::Ident) {
            Token t = next();
            use_var(t, "unbound-type-var", "unguarded-type-var");
            return GVar{t.text};
        }
        fail(peek().span, "expected a global type but found " + describe(peek()));
    }

    // ----------------------------------------------------------- local types

    LocalType local_prim() {
        DepthGuard g(*this, peek().span);
        if (accept_sym("(")) {
            LocalType t = local_prim();
            expect_sym(")");
            return t;
        }
        if (accept_kw("end")) return end_local();
        if (at_kw("rec")) {
            next();
            Token v = peek();
            ident("type variable");
            expect_sym(".");
            bind_rec(v, "duplicate-rec-var");
            LocalType body = local_prim();
            scope.pop_back();
            return LRec{v.text, body};
        }
        if (at_sym("!") || at_sym("?")) {
            bool send = next().text == "!";
            expect_sym("[");
            Role peer = role();
            expect_sym("]");
            auto saved = scope;
            mark_guarded();
            std::vector<LBranch> bs;
            std::set<std::string> labels;
            auto branch = [&] {
                Token lt = peek();
                std::string label = ident("label");
                if (!labels.insert(label).second)
                    report(lt.span, "duplicate label '" + label + "'", "duplicate-label");
                auto ss = sorts();
                expect_sym(".");
                bs.push_back({label, ss, local_prim()});
            };
            if (accept_sym("{")) {
                branch();
                while (accept_sym(";")) branch();
                expect_sym("}");
            } else {
                branch();
            }
            scope = saved;
            if (send) return LSend{peer, std::move(bs)};
            return LRecv{peer, std::move(bs)};
        }
        if (peek().kind == Tok::Ident) {
            Token t = next();
            use_var(t, "unbound-type-var", "unguarded-type-var");
            return LVar{t.text};
        }
        fail(peek().span, "expected a local type but found " + describe(peek()));
    }

    // ------------------------------------------------------------- processes

    void params_header() {
        if (!at_kw("params")) return;
        next();
        do {
            params.insert(ident("parameter name"));
        } while (accept_sym(","));
        expect_sym(";");
    }

    Process process_par() {
        DepthGuard g(*this, peek().span);
        Process l = process_prim();
        while (accept_sym("|")) {
            check_chain();
            l = PPar{l, process_prim()};
        }
        return l;
    }

    std::vector<Expr> send_args() {
        std::vector<Expr> args;
        if (accept_sym("<>")) return args;
        if (!accept_sym("<")) return args;
        if (accept_sym(">")) return args;
        ExprMode m{Names::Process, true};
        args.push_back(expr(m));
        while (accept_sym(",")) args.push_back(expr(m));
        expect_sym(">");
        return args;
    }

    Process process_prim() {
        DepthGuard g(*this, peek().span);
        if (accept_sym("(")) {
            Process p = process_par();
            expect_sym(")");
            return p;
        }
        if (peek().kind == Tok::Int && peek().text == "0") {
            next();
            return end_process();
        }
        if (at_kw("req") && peek(1).kind == Tok::Ident) {
            next();
            std::string a = ident("shared channel");
            expect_sym("(");
            Span nsp = peek().span;
            std::int64_t n = integer("number of roles");
            if (n < 2 || n > 1000000) fail(nsp, "a session needs at least two roles", "bad-role");
            expect_sym(")");
            expect_sym("(");
            std::string s = ident("session name");
            expect_sym(")");
            expect_sym(".");
            auto saved = scope;
            mark_guarded();
            Process cont = process_prim();
            scope = saved;
            return PRequest{a, static_cast<std::uint32_t>(n), s, cont};
        }
        if (at_kw("acc") && peek(1).kind == Tok::Ident) {
            next();
            std::string a = ident("shared channel");
            expect_sym("[");
            Role r = role();
            expect_sym("]");
            expect_sym("(");
            std::string s = ident("session name");
            expect_sym(")");
            expect_sym(".");
            auto saved = scope;
            mark_guarded();
            Process cont = process_prim();
            scope = saved;
            return PAccept{a, r, s, cont};
        }
        if (at_kw("if")) {
            next();
            Expr c = expr({Names::Process, false});
            expect_kw("then");
            Process t = process_prim();
            expect_kw("else");
            Process e = process_prim();
            return PCond{c, t, e};
        }
        if (at_kw("new") && peek(1).kind == Tok::Ident) {
            next();
            std::string s = ident("session name");
            expect_sym(".");
            return PRestrict{s, process_prim()};
        }
        if (at_kw("rec")) {
            next();
            Token v = peek();
            ident("process variable");
            expect_sym(".");
            bind_rec(v, "duplicate-rec-var");
            Process body = process_prim();
            scope.pop_back();
            return PRec{v.text, body};
        }
        if (peek().kind == Tok::Ident && at_sym("[", 1)) {
            Token st = next();
            next();
            Role a = role();
            bool send = at_sym("->");
            if (!send && !at_sym("<-")) fail(peek().span, "expected '->' or '<-' but found " + describe(peek()));
            next();
            Role b = role();
            expect_sym("]");
            if (a == b) report(st.span, "a role cannot communicate with itself", "self-communication");
            auto saved = scope;
            mark_guarded();
            if (send) {
                expect_sym("!");
                std::string label = ident("label");
                auto args = send_args();
                expect_sym(".");
                Process cont = process_prim();
                scope = saved;
                return PSend{st.text, a, b, label, std::move(args), cont};
            }
            expect_sym("?");
            std::vector<PBranch> bs;
            std::set<std::string> labels;
            auto branch = [&] {
                Token lt = peek();
                std::string label = ident("label");
                if (!labels.insert(label).second)
                    report(lt.span, "duplicate label '" + label + "'", "duplicate-label");
                std::vector<std::string> binders;
                if (accept_sym("(")) {
                    if (!at_sym(")")) {
                        do {
                            Token bt = peek();
                            std::string x = ident("binder");
                            if (std::find(binders.begin(), binders.end(), x) != binders.end())
                                report(bt.span, "binder '" + x + "' repeated in one input", "duplicate-binder");
                            binders.push_back(x);
                        } while (accept_sym(","));
                    }
                    expect_sym(")");
                }
                expect_sym(".");
                for (const auto& x : binders) bound_vars.push_back(x);
                Process cont = process_prim();
                bound_vars.resize(bound_vars.size() - binders.size());
                bs.push_back({label, std::move(binders), cont});
            };
            if (accept_sym("{")) {
                branch();
                while (accept_sym(";")) branch();
                expect_sym("}");
            } else {
                branch();
            }
            scope = saved;
            return PRecv{st.text, a, b, std::move(bs)};
        }
        if (peek().kind == Tok::Ident) {
            Token t = next();
            use_var(t, "unbound-process-var", "unguarded-process-var");
            return PVar{t.text};
        }
        fail(peek().span, "expected a process but found " + describe(peek()));
    }

    // ------------------------------------------------------------------- SGP

    Sgp sgp_par() {
        DepthGuard g(*this, peek().span);
        Sgp l = sgp_prim();
        while (accept_sym("|")) {
            check_chain();
            l = SPar{l, sgp_prim()};
        }
        return l;
    }

    Provenance provenance() {
        expect_sym("<");
        std::string s = ident("session name");
        expect_sym("[");
        Role a = role();
        expect_sym("->");
        Role b = role();
        expect_sym("]");
        expect_sym("!");
        std::string label = ident("label");
        expect_sym(">");
        return Provenance{s, a, b, label};
    }

    Sgp sgp_prim() {
        DepthGuard g(*this, peek().span);
        std::optional<Provenance> origin;
        if (at_sym("<")) origin = provenance();
        if (origin || at_kw("tau") || (peek().kind == Tok::Ident && at_sym("@", 1))) {
            if (accept_kw("tau")) {
                expect_sym(".");
                return tau(sgp_prim(), origin);
            }
            std::vector<AnnotatedVar> targets;
            do {
                std::string base = ident("variable");
                targets.push_back(annotated_tail(base));
            } while (accept_sym(","));
            Span sp = peek().span;
            expect_sym(":=");
            std::vector<Expr> values;
            ExprMode m{Names::Sgp, false};
            values.push_back(expr(m));
            while (accept_sym(",")) values.push_back(expr(m));
            if (values.size() != targets.size())
                report(sp, "assignment has " + std::to_string(targets.size()) + " targets but " +
                               std::to_string(values.size()) + " values",
                       "arity");
            std::set<AnnotatedVar> seen(targets.begin(), targets.end());
            if (seen.size() != targets.size()) report(sp, "a variable is assigned twice", "duplicate-target");
            expect_sym(".");
            return SAssign{std::move(targets), std::move(values), sgp_prim(), origin};
        }
        if (accept_sym("(")) {
            Sgp s = sgp_par();
            expect_sym(")");
            return s;
        }
        if (peek().kind == Tok::Int && peek().text == "0") {
            next();
            return end_sgp();
        }
        if (at_kw("if")) {
            next();
            Expr c = expr({Names::Sgp, false});
            expect_kw("then");
            Sgp t = sgp_prim();
            expect_kw("else");
            Sgp e = sgp_prim();
            return SIf{c, t, e};
        }
        if (at_kw("rec")) {
            next();
            Token v = peek();
            ident("recursion variable");
            expect_sym(".");
            scope.push_back({v.text, true});
            Sgp body = sgp_prim();
            scope.pop_back();
            return SRec{v.text, body};
        }
        if (peek().kind == Tok::Ident) {
            Token t = next();
            use_var(t, "unbound-sgp-var", "unguarded-sgp-var");
            return SVar{t.text};
        }
        fail(peek().span, "expected an SGP process but found " + describe(peek()));
    }

    Value value() {
        if (accept_kw("true")) return true;
        if (accept_kw("false")) return false;
        bool neg = accept_sym("-");
        Span sp = peek().span;
        std::int64_t v = integer("value");
        if (neg) {
            if (v == std::numeric_limits<std::int64_t>::min()) fail(sp, "integer out of range", "integer-overflow");
            v = -v;
        }
        return v;
    }

    Vector vars_header() {
        Vector out;
        if (!at_kw("vars")) return out;
        next();
        if (accept_sym(";")) return out;
        do {
            Token t = peek();
            std::string base = ident("variable");
            AnnotatedVar v = annotated_tail(base);
            expect_sym("=");
            if (!out.emplace(v, value()).second) report(t.span, "variable declared twice", "duplicate-var");
        } while (accept_sym(","));
        expect_sym(";");
        return out;
    }

    // -------------------------------------------------------------- formulas

    static bool arithmetic_or_relational(const Token& t) {
        if (t.kind != Tok::Sym) return false;
        static const std::set<std::string> ops = {"+", "-", "*", "/", "%", "<", "<=",
                                                  ">", ">=", "==", "!="};
        return ops.count(t.text) > 0;
    }

    Formula formula() {
        DepthGuard g(*this, peek().span);
        Formula l = formula_or();
        if (accept_sym("->")) return FImplies{l, formula()};
        return l;
    }

    Formula formula_or() {
        Formula l = formula_and();
        while (accept_sym("||")) {
            check_chain();
            l = FOr{l, formula_and()};
        }
        return l;
    }

    Formula formula_and() {
        Formula l = formula_until();
        while (accept_sym("&&")) {
            check_chain();
            l = FAnd{l, formula_until()};
        }
        return l;
    }

    Formula formula_until() {
        DepthGuard g(*this, peek().span);
        Formula l = formula_unary();
        if (accept_kw("U")) return FUntil{l, formula_until()};
        return l;
    }

    Formula formula_unary() {
        DepthGuard g(*this, peek().span);
        if (accept_sym("!")) return FNot{formula_unary()};
        if (accept_sym("[]")) return FAlways{formula_unary()};
        if (accept_sym("<>")) return FEventually{formula_unary()};
        if (at_sym("(")) {
            std::size_t save = pos_;
            std::size_t diag_count = diags_.size();
            try {
                next();
                Formula f = formula();
                expect_sym(")");
                if (!arithmetic_or_relational(peek())) return f;
            } catch (const Abort&) {
            }
            pos_ = save;
            diags_.resize(diag_count);
        }
        return FAtom{expr_cmp({Names::Free, false})};
    }

    std::size_t pos_ = 0;

private:
    std::vector<Token> toks_;
    std::vector<Diagnostic>& diags_;
    int depth_ = 0;
    int chain_ = 0;
};

template <class T, class F>
Parsed<T> run_parser(std::string_view text, F&& body) {
    Parsed<T> out;
    try {
        Lexer lex(text, out.diagnostics);
        Parser p(lex.run(), out.diagnostics);
        T v = body(p);
        if (out.diagnostics.empty()) out.value = std::move(v);
    } catch (const Abort&) {
    }
    return out;
}

} // namespace

Parsed<Expr> parse_expr(std::string_view text, const std::set<std::string>& params) {
    return run_parser<Expr>(text, [&](Parser& p) {
        p.params = params;
        Expr e = p.expr({Parser::Names::Free, false});
        p.expect_eof();
        return e;
    });
}

Parsed<GlobalType> parse_global_type(std::string_view text) {
    return run_parser<GlobalType>(text, [](Parser& p) {
        GlobalType g = p.global_par();
        p.expect_eof();
        return g;
    });
}

Parsed<LocalType> parse_local_type(std::string_view text) {
    return run_parser<LocalType>(text, [](Parser& p) {
        LocalType l = p.local_prim();
        p.expect_eof();
        return l;
    });
}

Parsed<Process> parse_process(std::string_view text, const std::set<std::string>& params) {
    return run_parser<Process>(text, [&](Parser& p) {
        p.params = params;
        p.params_header();
        Process q = p.process_par();
        p.expect_eof();
        return q;
    });
}

std::set<std::string> declared_params(std::string_view text) {
    std::set<std::string> out;
    std::vector<Diagnostic> diags;
    try {
        Lexer lex(text, diags);
        Parser p(lex.run(), diags);
        p.params_header();
        out = p.params;
    } catch (const Abort&) {
    }
    return out;
}

Parsed<Sgp> parse_sgp(std::string_view text) {
    return run_parser<Sgp>(text, [](Parser& p) {
        Sgp s = p.sgp_par();
        p.expect_eof();
        return s;
    });
}

Parsed<SgpSystem> parse_sgp_system(std::string_view text) {
    return run_parser<SgpSystem>(text, [](Parser& p) {
        Vector vars = p.vars_header();
        Sgp s = p.sgp_par();
        p.expect_eof();
        for (const auto& v : annotated_vars(s)) vars.emplace(v, std::int64_t{0});
        return SgpSystem{std::move(vars), s};
    });
}

Parsed<Formula> parse_formula(std::string_view text) {
    return run_parser<Formula>(text, [](Parser& p) {
        Formula f = p.formula();
        p.expect_eof();
        return f;
    });
}

// ==================================================================== config

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

} // namespace

Parsed<Config> parse_config(std::string_view text) {
    Parsed<Config> out;
    Config cfg;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        ++line_no;
        start = end + 1;
        std::vector<Diagnostic> diags;
        try {
            Lexer lex(line, diags, line_no);
            Parser p(lex.run(), diags);
            if (p.at_eof()) {
                if (end == text.size()) break;
                continue;
            }
            Token kw = p.peek();
            std::string key = p.ident("a config key");
            if (key == "param") {
                ParamDomain d;
                d.name = p.ident("parameter name");
                p.expect_sym("=");
                Value lo = p.value();
                p.expect_sym("..");
                Value hi = p.value();
                if (!std::holds_alternative<std::int64_t>(lo) || !std::holds_alternative<std::int64_t>(hi))
                    p.fail(kw.span, "parameter domains are integer ranges", "bad-domain");
                d.lo = std::get<std::int64_t>(lo);
                d.hi = std::get<std::int64_t>(hi);
                if (d.lo > d.hi) p.fail(kw.span, "empty parameter domain", "bad-domain");
                p.expect_eof();
                cfg.params.push_back(d);
            } else if (key == "ghost") {
                Ghost g;
                g.name = p.ident("ghost name");
                p.expect_sym(":");
                Token st = p.peek();
                std::string sort = p.ident("sort");
                if (sort == "Int") g.sort = Sort::Int;
                else if (sort == "Bool") g.sort = Sort::Bool;
                else p.fail(st.span, "unknown sort '" + sort + "'", "unknown-sort");
                p.expect_sym("=");
                g.init = p.value();
                if (sort_of(g.init) != g.sort) p.fail(st.span, "initial value does not match the sort", "sort");
                while (p.accept_kw("on")) {
                    Provenance on;
                    on.session = p.ident("session name");
                    p.expect_sym("[");
                    on.from = p.role();
                    p.expect_sym("->");
                    on.to = p.role();
                    p.expect_sym("]");
                    p.expect_sym("!");
                    on.label = p.ident("label");
                    p.expect_sym(":=");
                    g.triggers.push_back({on, p.expr({Parser::Names::Free, false})});
                }
                p.expect_eof();
                auto it = std::find_if(cfg.ghosts.begin(), cfg.ghosts.end(),
                                       [&](const Ghost& x) { return x.name == g.name; });
                if (it == cfg.ghosts.end()) {
                    cfg.ghosts.push_back(g);
                } else {
                    if (it->sort != g.sort || it->init != g.init)
                        p.fail(kw.span, "ghost '" + g.name + "' redeclared differently", "ghost");
                    it->triggers.insert(it->triggers.end(), g.triggers.begin(), g.triggers.end());
                }
            } else if (key == "ltl") {
                LtlProperty l{p.ident("property name"), "", FAtom{bool_lit(true)}};
                p.expect_sym("=");
                std::size_t col = p.peek().span.col;
                l.text = trim(line.substr(col - 1));
                Parser fp = p;
                l.formula = fp.formula();
                fp.expect_eof();
                if (cfg.find_ltl(l.name)) p.fail(kw.span, "property '" + l.name + "' defined twice", "duplicate-ltl");
                cfg.ltl.push_back(l);
            } else if (key == "init") {
                std::string name = p.ident("variable");
                if (p.at_sym("@")) {
                    AnnotatedVar v = p.annotated_tail(name);
                    p.expect_sym("=");
                    cfg.init_vars[v] = p.value();
                } else {
                    p.expect_sym("=");
                    cfg.init_values[name] = p.value();
                }
                p.expect_eof();
            } else {
                p.fail(kw.span, "unknown config key '" + key + "'", "unknown-key");
            }
        } catch (const Abort&) {
        }
        out.diagnostics.insert(out.diagnostics.end(), diags.begin(), diags.end());
        if (end == text.size()) break;
    }
    if (out.diagnostics.empty()) out.value = std::move(cfg);
    return out;
}

// ================================================================= renderers

namespace {

int precedence(BinOp op) {
    switch (op) {
        case BinOp::Or: return 1;
        case BinOp::And: return 2;
        case BinOp::Lt:
        case BinOp::Le:
        case BinOp::Gt:
        case BinOp::Ge:
        case BinOp::Eq:
        case BinOp::Ne: return 3;
        case BinOp::Add:
        case BinOp::Sub: return 4;
        case BinOp::Mul:
        case BinOp::Div:
        case BinOp::Mod: return 5;
    }
    return 0;
}

const char* symbol(BinOp op) {
    switch (op) {
        case BinOp::Add: return "+";
        case BinOp::Sub: return "-";
        case BinOp::Mul: return "*";
        case BinOp::Div: return "/";
        case BinOp::Mod: return "%";
        case BinOp::Lt: return "<";
        case BinOp::Le: return "<=";
        case BinOp::Gt: return ">";
        case BinOp::Ge: return ">=";
        case BinOp::Eq: return "==";
        case BinOp::Ne: return "!=";
        case BinOp::And: return "&&";
        case BinOp::Or: return "||";
    }
    return "?";
}

int expr_prec(const Expr& e) {
    if (auto b = e.as<Binary>()) return precedence(b->op);
    if (e.is<Unary>()) return 6;
    if (auto i = e.as<IntLit>(); i && i->value < 0) return 6;
    return 7;
}

void render_expr(const Expr& e, std::ostringstream& os, int min_prec) {
    bool paren = expr_prec(e) < min_prec;
    if (paren) os << '(';
    std::visit(overloaded{
                   [&](const IntLit& x) { os << x.value; },
                   [&](const BoolLit& x) { os << (x.value ? "true" : "false"); },
                   [&](const VarRef& x) { os << x.name; },
                   [&](const ParamRef& x) { os << x.name; },
                   [&](const AVarRef& x) { os << render(x.var); },
                   [&](const Unary& x) {
                       os << (x.op == UnOp::Neg ? "-" : "!");
                       // `-5` would read back as a literal, `- -5` as a double negation.
                       bool lit = x.arg.is<IntLit>() && x.op == UnOp::Neg;
                       if (lit) {
                           os << '(';
                           render_expr(x.arg, os, 0);
                           os << ')';
                       } else {
                           render_expr(x.arg, os, 6);
                       }
                   },
                   [&](const Binary& x) {
                       int p = precedence(x.op);
                       bool cmp = p == 3;
                       render_expr(x.lhs, os, cmp ? p + 1 : p);
                       os << ' ' << symbol(x.op) << ' ';
                       render_expr(x.rhs, os, p + 1);
                   },
               },
               e.node().v);
    if (paren) os << ')';
}

std::string render_sorts(const std::vector<Sort>& sorts) {
    std::string out = "(";
    for (std::size_t i = 0; i < sorts.size(); ++i) {
        if (i) out += ", ";
        out += to_string(sorts[i]);
    }
    return out + ")";
}

void render_global(const GlobalType& g, std::ostringstream& os, bool prim);

void render_global_cont(const GlobalType& g, std::ostringstream& os) { render_global(g, os, true); }

void render_global(const GlobalType& g, std::ostringstream& os, bool prim) {
    std::visit(overloaded{
                   [&](const GComm& c) {
                       os << c.from.id << "->" << c.to.id << ':';
                       auto branch = [&](const GBranch& b) {
                           os << b.label << render_sorts(b.sorts) << ". ";
                           render_global_cont(b.cont, os);
                       };
                       if (c.branches.size() == 1) {
                           branch(c.branches[0]);
                       } else {
                           os << "{ ";
                           for (std::size_t i = 0; i < c.branches.size(); ++i) {
                               if (i) os << " ; ";
                               branch(c.branches[i]);
                           }
                           os << " }";
                       }
                   },
                   [&](const GPar& p) {
                       if (prim) os << '(';
                       render_global(p.left, os, false);
                       os << " || ";
                       render_global(p.right, os, true);
                       if (prim) os << ')';
                   },
                   [&](const GRec& r) {
                       os << "rec " << r.var << ". ";
                       render_global_cont(r.body, os);
                   },
                   [&](const GVar& v) { os << v.var; },
                   [&](const GEnd&) { os << "end"; },
               },
               g.node().v);
}

void render_local(const LocalType& l, std::ostringstream& os) {
    auto branches = [&](const char* dir, Role peer, const std::vector<LBranch>& bs) {
        os << dir << '[' << peer.id << ']';
        auto branch = [&](const LBranch& b) {
            os << b.label << render_sorts(b.sorts) << ". ";
            render_local(b.cont, os);
        };
        if (bs.size() == 1) {
            branch(bs[0]);
        } else {
            os << "{ ";
            for (std::size_t i = 0; i < bs.size(); ++i) {
                if (i) os << " ; ";
                branch(bs[i]);
            }
            os << " }";
        }
    };
    std::visit(overloaded{
                   [&](const LSend& c) { branches("!", c.peer, c.branches); },
                   [&](const LRecv& c) { branches("?", c.peer, c.branches); },
                   [&](const LRec& r) {
                       os << "rec " << r.var << ". ";
                       render_local(r.body, os);
                   },
                   [&](const LVar& v) { os << v.var; },
                   [&](const LEnd&) { os << "end"; },
               },
               l.node().v);
}

void render_process(const Process& p, std::ostringstream& os, bool prim) {
    auto cont = [&](const Process& q) { render_process(q, os, true); };
    std::visit(overloaded{
                   [&](const PRequest& x) {
                       os << "req " << x.shared << '(' << x.roles << ")(" << x.session << "). ";
                       cont(x.cont);
                   },
                   [&](const PAccept& x) {
                       os << "acc " << x.shared << '[' << x.role.id << "](" << x.session << "). ";
                       cont(x.cont);
                   },
                   [&](const PSend& x) {
                       os << x.session << '[' << x.from.id << "->" << x.to.id << "]!" << x.label << '<';
                       for (std::size_t i = 0; i < x.args.size(); ++i) {
                           if (i) os << ", ";
                           std::string a = render(x.args[i]);
                           if (a.find('>') != std::string::npos) a = "(" + a + ")";
                           os << a;
                       }
                       os << ">. ";
                       cont(x.cont);
                   },
                   [&](const PRecv& x) {
                       os << x.session << '[' << x.self.id << "<-" << x.from.id << "]?";
                       auto branch = [&](const PBranch& b) {
                           os << b.label << '(';
                           for (std::size_t i = 0; i < b.binders.size(); ++i) {
                               if (i) os << ", ";
                               os << b.binders[i];
                           }
                           os << "). ";
                           cont(b.cont);
                       };
                       if (x.branches.size() == 1) {
                           branch(x.branches[0]);
                       } else {
                           os << "{ ";
                           for (std::size_t i = 0; i < x.branches.size(); ++i) {
                               if (i) os << " ; ";
                               branch(x.branches[i]);
                           }
                           os << " }";
                       }
                   },
                   [&](const PCond& x) {
                       os << "if " << render(x.cond) << " then ";
                       cont(x.then_branch);
                       os << " else ";
                       cont(x.else_branch);
                   },
                   [&](const PPar& x) {
                       if (prim) os << '(';
                       render_process(x.left, os, false);
                       os << " | ";
                       render_process(x.right, os, true);
                       if (prim) os << ')';
                   },
                   [&](const PEnd&) { os << '0'; },
                   [&](const PRestrict& x) {
                       os << "new " << x.session << ". ";
                       cont(x.body);
                   },
                   [&](const PRec& x) {
                       os << "rec " << x.var << ". ";
                       cont(x.body);
                   },
                   [&](const PVar& x) { os << x.var; },
               },
               p.node().v);
}

void render_sgp(const Sgp& s, std::ostringstream& os, bool prim, bool prov) {
    auto cont = [&](const Sgp& q) { render_sgp(q, os, true, prov); };
    std::visit(overloaded{
                   [&](const SAssign& a) {
                       if (prov && a.origin) os << '<' << render(*a.origin) << "> ";
                       if (a.targets.empty()) {
                           os << "tau. ";
                       } else {
                           for (std::size_t i = 0; i < a.targets.size(); ++i) {
                               if (i) os << ", ";
                               os << render(a.targets[i]);
                           }
                           os << " := ";
                           for (std::size_t i = 0; i < a.values.size(); ++i) {
                               if (i) os << ", ";
                               os << render(a.values[i]);
                           }
                           os << ". ";
                       }
                       cont(a.cont);
                   },
                   [&](const SIf& c) {
                       os << "if " << render(c.cond) << " then ";
                       cont(c.then_branch);
                       os << " else ";
                       cont(c.else_branch);
                   },
                   [&](const SPar& p) {
                       if (prim) os << '(';
                       render_sgp(p.left, os, false, prov);
                       os << " | ";
                       render_sgp(p.right, os, true, prov);
                       if (prim) os << ')';
                   },
                   [&](const SRec& r) {
                       os << "rec " << r.var << ". ";
                       cont(r.body);
                   },
                   [&](const SVar& v) { os << v.var; },
                   [&](const SEnd&) { os << '0'; },
               },
               s.node().v);
}

int formula_prec(const Formula& f) {
    return std::visit(overloaded{
                          [](const FImplies&) { return 1; },
                          [](const FOr&) { return 2; },
                          [](const FAnd&) { return 3; },
                          [](const FUntil&) { return 4; },
                          [](const FNot&) { return 5; },
                          [](const FAlways&) { return 5; },
                          [](const FEventually&) { return 5; },
                          [](const FAtom&) { return 6; },
                      },
                      f.node().v);
}

void render_formula(const Formula& f, std::ostringstream& os, int min_prec) {
    bool paren = formula_prec(f) < min_prec;
    if (paren) os << '(';
    std::visit(overloaded{
                   [&](const FAtom& a) {
                       std::ostringstream e;
                       // Atoms sit below the boolean connectives; keep them grouped.
                       render_expr(a.expr, e, 3);
                       os << e.str();
                   },
                   [&](const FNot& x) {
                       os << '!';
                       render_formula(x.arg, os, 5);
                   },
                   [&](const FAlways& x) {
                       os << "[] ";
                       render_formula(x.arg, os, 5);
                   },
                   [&](const FEventually& x) {
                       os << "<> ";
                       render_formula(x.arg, os, 5);
                   },
                   [&](const FAnd& x) {
                       render_formula(x.lhs, os, 3);
                       os << " && ";
                       render_formula(x.rhs, os, 4);
                   },
                   [&](const FOr& x) {
                       render_formula(x.lhs, os, 2);
                       os << " || ";
                       render_formula(x.rhs, os, 3);
                   },
                   [&](const FImplies& x) {
                       render_formula(x.lhs, os, 2);
                       os << " -> ";
                       render_formula(x.rhs, os, 1);
                   },
                   [&](const FUntil& x) {
                       render_formula(x.lhs, os, 5);
                       os << " U ";
                       render_formula(x.rhs, os, 4);
                   },
               },
               f.node().v);
    if (paren) os << ')';
}

} // namespace

std::string render(const Expr& e) {
    std::ostringstream os;
    render_expr(e, os, 0);
    return os.str();
}

std::string render(const GlobalType& g) {
    std::ostringstream os;
    render_global(g, os, false);
    return os.str();
}

std::string render(const LocalType& l) {
    std::ostringstream os;
    render_local(l, os);
    return os.str();
}

std::string render(const Process& p) {
    std::ostringstream os;
    render_process(p, os, false);
    return os.str();
}

std::string render(const Sgp& s, bool with_provenance) {
    std::ostringstream os;
    render_sgp(s, os, false, with_provenance);
    return os.str();
}

std::string render(const SgpSystem& sys, bool with_provenance) {
    std::string out;
    if (!sys.vars.empty()) out = "vars " + render(sys.vars) + ";\n";
    return out + render(sys.program, with_provenance);
}

std::string render(const Formula& f) {
    std::ostringstream os;
    render_formula(f, os, 0);
    return os.str();
}

std::string render(const AnnotatedVar& v) {
    return v.base + "@" + v.session + "[" + std::to_string(v.role.id) + "]";
}

std::string render(const Vector& v) {
    std::string out;
    for (const auto& [k, val] : v) {
        if (!out.empty()) out += ", ";
        out += render(k) + " = " + to_string(val);
    }
    return out;
}

std::string render(const Provenance& p) {
    return p.session + "[" + std::to_string(p.from.id) + "->" + std::to_string(p.to.id) + "]!" + p.label;
}

} // namespace mpst
