#include <algorithm>
#include <atomic>
#include <limits>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "mpst/semantics.hpp"
#include "mpst/verify.hpp"
#include "visit.hpp"

namespace mpst {

using detail::overloaded;

namespace {

using Truth = std::vector<char>;

Truth eval_formula(const Formula& f, std::size_t n, std::size_t l,
                   const std::function<bool(std::size_t, const Expr&)>& atom) {
    Truth out(n, 0);
    auto pointwise = [&](const Formula& a, const Formula& b, auto op) {
        Truth x = eval_formula(a, n, l, atom), y = eval_formula(b, n, l, atom);
        for (std::size_t i = 0; i < n; ++i) out[i] = op(x[i], y[i]);
    };
    // G and F: inside the cycle every position sees the whole cycle.
    auto globally = [&](const Truth& x, bool all) {
        bool cyc = all;
        for (std::size_t i = l; i < n; ++i) cyc = all ? cyc && x[i] : cyc || x[i];
        for (std::size_t i = l; i < n; ++i) out[i] = cyc;
        for (std::size_t i = l; i-- > 0;) out[i] = all ? x[i] && out[i + 1] : x[i] || out[i + 1];
    };
    std::visit(overloaded{
                   [&](const FAtom& a) {
                       for (std::size_t i = 0; i < n; ++i) out[i] = atom(i, a.expr);
                   },
                   [&](const FNot& x) {
                       Truth t = eval_formula(x.arg, n, l, atom);
                       for (std::size_t i = 0; i < n; ++i) out[i] = !t[i];
                   },
                   [&](const FAnd& x) { pointwise(x.lhs, x.rhs, [](char a, char b) { return a && b; }); },
                   [&](const FOr& x) { pointwise(x.lhs, x.rhs, [](char a, char b) { return a || b; }); },
                   [&](const FImplies& x) { pointwise(x.lhs, x.rhs, [](char a, char b) { return !a || b; }); },
                   [&](const FAlways& x) { globally(eval_formula(x.arg, n, l, atom), true); },
                   [&](const FEventually& x) { globally(eval_formula(x.arg, n, l, atom), false); },
                   [&](const FUntil& x) {
                       Truth a = eval_formula(x.lhs, n, l, atom), b = eval_formula(x.rhs, n, l, atom);
                       // Least fixpoint: two backward passes settle the cycle.
                       for (int pass = 0; pass < 2; ++pass)
                           for (std::size_t i = n; i-- > l;) {
                               char next = i + 1 == n ? out[l] : out[i + 1];
                               out[i] = b[i] || (a[i] && next);
                           }
                       for (std::size_t i = l; i-- > 0;) out[i] = b[i] || (a[i] && out[i + 1]);
                   },
               },
               f.node().v);
    return out;
}

// ------------------------------------------------------------ compiled runs

enum class Op { Lit, Slot, Param, Neg, Not, Bin };

struct CNode {
    Op op = Op::Lit;
    BinOp bin = BinOp::Add;
    std::int64_t value = 0;
    int a = -1;
    int b = -1;
};

struct Instr {
    enum Kind { Assign, If, Jump, End } kind = End;
    std::vector<int> targets;
    std::vector<int> values;
    std::vector<std::pair<int, int>> ghosts;
    int cond = -1;
    int next = -1;
    int other = -1;
};

/// A sequential SGP system flattened into slots and a control-flow graph.
class Machine {
public:
    Machine(const SgpSystem& sys, const EmitConfig& cfg, const std::vector<std::string>& params) : cfg_(cfg) {
        for (std::size_t i = 0; i < params.size(); ++i) param_index_[params[i]] = static_cast<int>(i);
        for (const auto& [v, val] : sys.vars) slot(v, val);
        for (const auto& v : annotated_vars(sys.program)) slot(v, Value{std::int64_t{0}});
        for (const auto& g : cfg.ghosts) {
            ghost_index_[g.name] = static_cast<int>(init_.size());
            init_.push_back(encode(g.init));
        }
        for (const auto& g : cfg.ghosts)
            for (const auto& t : g.triggers) triggers_.push_back({t.on, ghost_index_.at(g.name), compile(t.value)});
        std::map<std::string, int> labels;
        start_ = resolve(build(sys.program, labels));
    }

    int compile(const Expr& e) {
        CNode n;
        std::visit(overloaded{
                       [&](const IntLit& x) { n.value = x.value; },
                       [&](const BoolLit& x) { n.value = x.value ? 1 : 0; },
                       [&](const VarRef& x) { name_ref(x.name, n); },
                       [&](const ParamRef& x) { name_ref(x.name, n); },
                       [&](const AVarRef& x) {
                           n.op = Op::Slot;
                           n.value = slot(x.var, Value{std::int64_t{0}});
                       },
                       [&](const Unary& x) {
                           n.op = x.op == UnOp::Neg ? Op::Neg : Op::Not;
                           n.a = compile(x.arg);
                       },
                       [&](const Binary& x) {
                           n.op = Op::Bin;
                           n.bin = x.op;
                           n.a = compile(x.lhs);
                           n.b = compile(x.rhs);
                       },
                   },
                   e.node().v);
        nodes_.push_back(n);
        return static_cast<int>(nodes_.size()) - 1;
    }

    std::int64_t eval(int i, const std::vector<std::int64_t>& s, const std::vector<std::int64_t>& p) const {
        const CNode& n = nodes_[i];
        switch (n.op) {
        case Op::Lit: return n.value;
        case Op::Slot: return s[n.value];
        case Op::Param: return p[n.value];
        case Op::Not: return !eval(n.a, s, p);
        case Op::Neg: {
            std::int64_t x = eval(n.a, s, p);
            if (x == std::numeric_limits<std::int64_t>::min()) throw EvalError("Overflow", "overflow in negation");
            return -x;
        }
        case Op::Bin: break;
        }
        if (n.bin == BinOp::And) return eval(n.a, s, p) && eval(n.b, s, p);
        if (n.bin == BinOp::Or) return eval(n.a, s, p) || eval(n.b, s, p);
        std::int64_t x = eval(n.a, s, p), y = eval(n.b, s, p), out = 0;
        switch (n.bin) {
        case BinOp::Add:
            if (__builtin_add_overflow(x, y, &out)) throw EvalError("Overflow", "overflow in addition");
            return out;
        case BinOp::Sub:
            if (__builtin_sub_overflow(x, y, &out)) throw EvalError("Overflow", "overflow in subtraction");
            return out;
        case BinOp::Mul:
            if (__builtin_mul_overflow(x, y, &out)) throw EvalError("Overflow", "overflow in multiplication");
            return out;
        case BinOp::Div:
        case BinOp::Mod:
            if (y == 0) throw EvalError("DivisionByZero", "division by zero");
            if (x == std::numeric_limits<std::int64_t>::min() && y == -1) throw EvalError("Overflow", "overflow in division");
            return n.bin == BinOp::Div ? x / y : x % y;
        case BinOp::Lt: return x < y;
        case BinOp::Le: return x <= y;
        case BinOp::Gt: return x > y;
        case BinOp::Ge: return x >= y;
        case BinOp::Eq: return x == y;
        case BinOp::Ne: return x != y;
        default: return 0;
        }
    }

    struct Run {
        /// Snapshots: slot values followed by the program counter.
        std::vector<std::vector<std::int64_t>> states;
        std::size_t loop_start = 0;
    };

    Run run(const std::vector<std::int64_t>& params, std::size_t max_depth) const {
        struct Hash {
            std::size_t operator()(const std::vector<std::int64_t>& v) const {
                std::size_t h = 1469598103934665603ull;
                for (auto x : v) h = (h ^ static_cast<std::size_t>(x)) * 1099511628211ull;
                return h;
            }
        };
        Run r;
        std::unordered_map<std::vector<std::int64_t>, std::size_t, Hash> seen;
        std::vector<std::int64_t> s = init_;
        int pc = start_;
        std::vector<std::int64_t> tmp;
        for (;;) {
            std::vector<std::int64_t> snap = s;
            snap.push_back(pc);
            auto [it, fresh] = seen.emplace(snap, r.states.size());
            if (!fresh) {
                r.loop_start = it->second;
                return r;
            }
            r.states.push_back(std::move(snap));
            if (r.states.size() > max_depth) throw BoundExceeded("run longer than " + std::to_string(max_depth) + " steps");
            const Instr& in = code_[pc];
            if (in.kind == Instr::Assign) {
                tmp.clear();
                for (int v : in.values) tmp.push_back(eval(v, s, params));
                for (std::size_t i = 0; i < tmp.size(); ++i) s[in.targets[i]] = tmp[i];
                for (auto [g, e] : in.ghosts) s[g] = eval(e, s, params);
                pc = in.next;
            } else if (in.kind == Instr::If) {
                pc = eval(in.cond, s, params) ? in.next : in.other;
            }
        }
    }

    const std::vector<std::int64_t>& initial() const { return init_; }

private:
    struct Trig {
        Provenance on;
        int ghost;
        int expr;
    };

    const EmitConfig& cfg_;
    std::map<AnnotatedVar, int> slot_index_;
    std::map<std::string, int> flat_index_;
    std::map<std::string, int> ghost_index_;
    std::map<std::string, int> param_index_;
    std::vector<std::int64_t> init_;
    std::vector<CNode> nodes_;
    std::vector<Instr> code_;
    std::vector<Trig> triggers_;
    int start_ = 0;

    static std::int64_t encode(const Value& v) {
        if (auto b = std::get_if<bool>(&v)) return *b ? 1 : 0;
        return std::get<std::int64_t>(v);
    }

    int slot(const AnnotatedVar& v, const Value& init) {
        auto it = slot_index_.find(v);
        if (it != slot_index_.end()) return it->second;
        int i = static_cast<int>(init_.size());
        init_.push_back(encode(init));
        slot_index_[v] = i;
        auto r = cfg_.rename.find(v);
        flat_index_[r == cfg_.rename.end() ? flat_name(v) : r->second] = i;
        return i;
    }

    void name_ref(const std::string& name, CNode& n) {
        if (auto it = ghost_index_.find(name); it != ghost_index_.end()) {
            n.op = Op::Slot;
            n.value = it->second;
        } else if (auto it = flat_index_.find(name); it != flat_index_.end()) {
            n.op = Op::Slot;
            n.value = it->second;
        } else if (auto it = param_index_.find(name); it != param_index_.end()) {
            n.op = Op::Param;
            n.value = it->second;
        } else {
            throw EvalError("UnboundSymbol", "unknown symbol '" + name + "'");
        }
    }

    int emit(Instr in) {
        code_.push_back(std::move(in));
        return static_cast<int>(code_.size()) - 1;
    }

    int build(const Sgp& s, std::map<std::string, int>& labels) {
        return std::visit(
            overloaded{
                [&](const SAssign& a) {
                    Instr in;
                    in.kind = Instr::Assign;
                    for (const auto& t : a.targets) in.targets.push_back(slot(t, Value{std::int64_t{0}}));
                    for (const auto& v : a.values) in.values.push_back(compile(v));
                    if (a.origin)
                        for (const auto& t : triggers_)
                            if (t.on == *a.origin) in.ghosts.push_back({t.ghost, t.expr});
                    in.next = build(a.cont, labels);
                    return emit(std::move(in));
                },
                [&](const SIf& i) {
                    Instr in;
                    in.kind = Instr::If;
                    in.cond = compile(i.cond);
                    in.next = build(i.then_branch, labels);
                    in.other = build(i.else_branch, labels);
                    return emit(std::move(in));
                },
                [&](const SPar&) -> int {
                    throw UnsupportedParallel("parallel SGP systems are checked with Spin on the emitted Promela model");
                },
                [&](const SRec& r) {
                    int jump = emit(Instr{Instr::Jump, {}, {}, {}, -1, -1, -1});
                    auto saved = labels;
                    labels[r.var] = jump;
                    int body = build(r.body, labels);
                    labels = std::move(saved);
                    code_[jump].next = body;
                    return jump;
                },
                [&](const SVar& v) -> int {
                    auto it = labels.find(v.var);
                    if (it == labels.end()) throw EvalError("UnboundSymbol", "unbound recursion variable " + v.var);
                    return it->second;
                },
                [&](const SEnd&) { return emit(Instr{Instr::End, {}, {}, {}, -1, -1, -1}); },
            },
            s.node().v);
    }

    /// Removes jumps; a jump cycle without steps becomes an end.
    int resolve(int start) {
        auto follow = [&](int pc) {
            for (std::size_t k = 0; pc >= 0 && code_[pc].kind == Instr::Jump; ++k) {
                if (k > code_.size()) return emit(Instr{Instr::End, {}, {}, {}, -1, -1, -1});
                pc = code_[pc].next;
            }
            return pc;
        };
        for (std::size_t i = 0; i < code_.size(); ++i) {
            if (code_[i].kind == Instr::Assign || code_[i].kind == Instr::If) code_[i].next = follow(code_[i].next);
            if (code_[i].kind == Instr::If) code_[i].other = follow(code_[i].other);
        }
        return follow(start);
    }
};

struct Grid {
    std::vector<std::string> names;
    std::vector<std::vector<std::int64_t>> domains;
    std::vector<std::int64_t> fixed;
    std::size_t total = 1;

    std::vector<std::int64_t> at(std::size_t k) const {
        std::vector<std::int64_t> out = fixed;
        for (std::size_t i = domains.size(); i-- > 0;) {
            out[i] = domains[i][k % domains[i].size()];
            k /= domains[i].size();
        }
        return out;
    }
};

Grid make_grid(const EmitConfig& cfg, const Bounds& b) {
    Grid g;
    for (const auto& d : cfg.params) {
        if (b.params.count(d.name)) continue;
        g.names.push_back(d.name);
        std::vector<std::int64_t> dom;
        for (std::int64_t x = d.lo; x <= d.hi; ++x) dom.push_back(x);
        g.total *= dom.size();
        g.domains.push_back(std::move(dom));
    }
    g.fixed.assign(g.names.size(), 0);
    auto add_fixed = [&](const std::string& n, const Value& v) {
        if (std::find(g.names.begin(), g.names.end(), n) != g.names.end()) return;
        g.names.push_back(n);
        g.fixed.push_back(std::holds_alternative<bool>(v) ? std::get<bool>(v) : std::get<std::int64_t>(v));
    };
    for (const auto& [n, v] : b.params) add_fixed(n, v);
    for (const auto& [n, v] : cfg.values) add_fixed(n, v);
    return g;
}

/// Replays one run with the reference SGP interpreter.
Witness replay(const SgpSystem& sys, const EmitConfig& cfg, const Valuation& params, std::size_t max_depth) {
    Witness w;
    Valuation ghosts;
    for (const auto& g : cfg.ghosts) ghosts[g.name] = g.init;
    std::map<std::string, std::size_t> seen;
    SgpSystem cur = sys;
    for (;;) {
        std::string key = render(cur);
        for (const auto& [n, v] : ghosts) key += " " + n + "=" + to_string(v);
        if (auto it = seen.find(key); it != seen.end()) {
            w.loop_start = it->second;
            return w;
        }
        seen[key] = w.states.size();
        std::string line = render(cur.vars);
        for (const auto& [n, v] : ghosts) line += (line.empty() ? "" : ", ") + n + " = " + to_string(v);
        w.steps.push_back(line);
        w.states.push_back({cur, ghosts});
        if (w.states.size() > max_depth) throw BoundExceeded("run longer than " + std::to_string(max_depth) + " steps");
        auto next = step_sgp(cur, params);
        if (next.empty()) continue;
        SgpSuccessor& n = next.front();
        if (n.origin) {
            Valuation env = params;
            for (const auto& [v, val] : n.state.vars) {
                auto r = cfg.rename.find(v);
                env[r == cfg.rename.end() ? flat_name(v) : r->second] = val;
            }
            for (const auto& [g, val] : ghosts) env[g] = val;
            for (const auto& g : cfg.ghosts)
                for (const auto& t : g.triggers)
                    if (t.on == *n.origin) ghosts[g.name] = eval_expr(t.value, env);
        }
        cur = std::move(n.state);
    }
}

} // namespace

bool holds_on_lasso(const Formula& f, std::size_t length, std::size_t loop_start,
                    const std::function<bool(std::size_t, const Expr&)>& atom) {
    if (length == 0 || loop_start >= length) throw Error("BadLasso", "lasso loop must start inside the run");
    return eval_formula(f, length, loop_start, atom)[0];
}

std::vector<Verdict> mc_check(const SgpSystem& sys, const std::vector<LtlProperty>& props, const EmitConfig& cfg,
                              const Bounds& b) {
    Grid grid = make_grid(cfg, b);
    Machine m(sys, cfg, grid.names);
    std::vector<std::map<const void*, int>> atoms(props.size());
    std::function<void(const Formula&, std::size_t)> collect = [&](const Formula& f, std::size_t k) {
        std::visit(overloaded{
                       [&](const FAtom& a) { atoms[k][a.expr.identity()] = m.compile(a.expr); },
                       [&](const FNot& x) { collect(x.arg, k); },
                       [&](const FAlways& x) { collect(x.arg, k); },
                       [&](const FEventually& x) { collect(x.arg, k); },
                       [&](const auto& x) {
                           collect(x.lhs, k);
                           collect(x.rhs, k);
                       },
                   },
                   f.node().v);
    };
    for (std::size_t k = 0; k < props.size(); ++k) collect(props[k].formula, k);

    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    std::vector<std::atomic<std::size_t>> first_fail(props.size());
    for (auto& f : first_fail) f = none;
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    std::atomic<bool> failed{false};

    auto worker = [&] {
        try {
            for (;;) {
                std::size_t k = next.fetch_add(1);
                if (k >= grid.total || failed) return;
                auto params = grid.at(k);
                auto run = m.run(params, b.max_depth);
                const auto& states = run.states;
                for (std::size_t p = 0; p < props.size(); ++p) {
                    if (first_fail[p] <= k) continue;
                    auto atom = [&](std::size_t i, const Expr& e) {
                        return m.eval(atoms[p].at(e.identity()), states[i], params) != 0;
                    };
                    if (holds_on_lasso(props[p].formula, states.size(), run.loop_start, atom)) continue;
                    std::size_t cur = first_fail[p];
                    while (k < cur && !first_fail[p].compare_exchange_weak(cur, k)) {
                    }
                }
            }
        } catch (...) {
            std::lock_guard lock(error_mu);
            if (!error) error = std::current_exception();
            failed = true;
        }
    };
    std::size_t threads = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 16);
    threads = std::min(threads, grid.total);
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (error) {
        try {
            std::rethrow_exception(error);
        } catch (const EvalError& e) {
            throw StuckEvaluation(e.code(), e.what());
        }
    }

    std::vector<Verdict> out;
    for (std::size_t p = 0; p < props.size(); ++p) {
        Verdict v;
        v.property = props[p].name;
        v.states = grid.total;
        if (first_fail[p] != none) {
            v.holds = false;
            auto params = grid.at(first_fail[p]);
            for (std::size_t i = 0; i < grid.names.size(); ++i) v.params[grid.names[i]] = params[i];
            v.witness = replay(sys, cfg, v.params, b.max_depth);
            v.message = "violated; " + std::to_string(grid.total) + " valuation(s) checked";
        } else {
            v.message = "holds on all " + std::to_string(grid.total) + " valuation(s)";
        }
        out.push_back(std::move(v));
    }
    return out;
}

Verdict mc_check(const SgpSystem& sys, const Formula& f, const EmitConfig& cfg, const Bounds& b) {
    std::string text = render(f);
    return mc_check(sys, std::vector<LtlProperty>{{text, text, f}}, cfg, b).front();
}

} // namespace mpst
