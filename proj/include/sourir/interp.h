#ifndef SOURIR_INTERP_H
#define SOURIR_INTERP_H

#include "sourir/ir.h"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace sourir {

using Address = size_t;

struct Value {
    enum class Kind { Int, Bool, Nil, Fun, Addr };
    Kind kind = Kind::Nil;
    int64_t intval = 0;
    bool boolval = false;
    FunName fun;
    Address addr = 0;

    static Value integer(int64_t v) {
        Value x;
        x.kind = Kind::Int;
        x.intval = v;
        return x;
    }
    static Value boolean(bool v) {
        Value x;
        x.kind = Kind::Bool;
        x.boolval = v;
        return x;
    }
    static Value nil() { return Value(); }
    static Value funref(FunName f) {
        Value x;
        x.kind = Kind::Fun;
        x.fun = std::move(f);
        return x;
    }
    static Value address(Address a) {
        Value x;
        x.kind = Kind::Addr;
        x.addr = a;
        return x;
    }
    static Value fromLit(const Lit& l) {
        switch (l.kind) {
        case Lit::Kind::Int:
            return integer(l.intval);
        case Lit::Kind::Bool:
            return boolean(l.boolval);
        case Lit::Kind::Nil:
            return nil();
        }
        return nil();
    }
    bool isLit() const { return kind == Kind::Int || kind == Kind::Bool || kind == Kind::Nil; }
    Lit toLit() const; // literals only
    // Structural on literals and function values, identity on addresses.
    bool operator==(const Value& o) const {
        if (kind != o.kind)
            return false;
        switch (kind) {
        case Kind::Int:
            return intval == o.intval;
        case Kind::Bool:
            return boolval == o.boolval;
        case Kind::Nil:
            return true;
        case Kind::Fun:
            return fun == o.fun;
        case Kind::Addr:
            return addr == o.addr;
        }
        return false;
    }
};

std::string printValue(const Value& v);

// Environments are small; a flat vector beats a hash map at this scale.
struct Environment {
    std::vector<std::pair<VarName, Value>> slots;

    const Value* get(const VarName& x) const {
        for (auto& [name, v] : slots)
            if (name == x)
                return &v;
        return nullptr;
    }
    void set(const VarName& x, Value v) {
        for (auto& [name, old] : slots)
            if (name == x) {
                old = std::move(v);
                return;
            }
        slots.emplace_back(x, std::move(v));
    }
    void remove(const VarName& x) {
        for (size_t i = 0; i < slots.size(); ++i)
            if (slots[i].first == x) {
                slots.erase(slots.begin() + i);
                return;
            }
    }
    std::set<VarName> domain() const {
        std::set<VarName> d;
        for (auto& [name, v] : slots)
            d.insert(name);
        return d;
    }
    // Order-insensitive comparison.
    bool operator==(const Environment& o) const;
};

struct Heap {
    std::vector<std::vector<Value>> blocks; // address = index, never reused

    Address alloc(std::vector<Value> block) {
        blocks.push_back(std::move(block));
        return blocks.size() - 1;
    }
    bool operator==(const Heap& o) const { return blocks == o.blocks; }
};

enum class ErrKind {
    None,
    UnboundVariable,
    UnknownLabel,
    UnknownFunction,
    TypeError,
    IndexOutOfBounds,
    DivisionByZero,
    IntegerOverflow,
    CallArityMismatch,
    CalleeNotFunction,
    ReturnFromMain,
    InputExhausted,
    BadDeoptTarget,
    FallThroughEnd,
};

const char* errKindName(ErrKind k);

struct RuntimeError {
    ErrKind kind;
    FunName fun;
    VersionName version;
    Label label;
    std::string detail;
};

// Evaluation errors surface as exceptions inside the interpreter and are
// reified into RunResult by run(); they never escape it.
class EvalError {
  public:
    EvalError(ErrKind kind, std::string detail) : kind(kind), detail(std::move(detail)) {}
    ErrKind kind;
    std::string detail;
};

struct Action {
    enum class Kind { Read, Print, Stop };
    Kind kind;
    Lit lit; // Read/Print payload

    static Action read(Lit l) { return {Kind::Read, l}; }
    static Action print(Lit l) { return {Kind::Print, l}; }
    static Action stop() { return {Kind::Stop, Lit::nil()}; }
    bool operator==(const Action&) const = default;
};
using Trace = std::vector<Action>;

std::string printAction(const Action& a);
std::string printTrace(const Trace& t);

struct Continuation {
    FunName fun;
    VersionName version;
    size_t returnPc = 0;
    VarName retVar;
    Environment savedEnv;
};

struct Configuration {
    const Program* program = nullptr;
    FunName fun;
    VersionName version;
    size_t pc = 0;      // index into the current stream
    bool halted = false; // stop executed: the post-stop empty-stream state
    std::vector<Continuation> stack;
    Heap heap;
    Environment env;

    const InstructionStream& instrs() const;
    const Label& label() const { return instrs()[pc].label; }
    const Instr& current() const { return instrs()[pc].instr; }
};

// State equality for transparency/composition experiments: same position,
// same stack shape, same heap contents, same environments.
bool configEqual(const Configuration& a, const Configuration& b);

// Expression evaluation (Fig 9).
Value evalSimple(const Environment& env, const SimpleExpr& se);
Value eval(const Heap& heap, const Environment& env, const Expr& e);
// Fresh environment with exactly the varmap's bindings, every expression
// evaluated in the old environment.
Environment evalVarmap(const Heap& heap, const Environment& env, const Varmap& vm);

// The DeoptimizeConf rule: control moves to the target with a rebuilt
// environment; one continuation is synthesized per extra frame, the first
// listed frame ending on top of the stack; the heap is untouched.
Configuration deoptimize(const Configuration& c, const DeoptTarget& target,
                         const std::vector<ExtraFrame>& frames);

struct ForcePolicy {
    enum class Mode { None, All, AtSite, ByOrdinal };
    Mode mode = Mode::None;
    FunName fun;        // AtSite
    VersionName version;
    Label label;
    std::set<uint64_t> ordinals; // ByOrdinal: dynamic assume occurrences, 0-based

    static ForcePolicy none() { return {}; }
    static ForcePolicy all() {
        ForcePolicy f;
        f.mode = Mode::All;
        return f;
    }
    static ForcePolicy atSite(FunName fn, VersionName v, Label l) {
        ForcePolicy f;
        f.mode = Mode::AtSite;
        f.fun = std::move(fn);
        f.version = std::move(v);
        f.label = std::move(l);
        return f;
    }
    static ForcePolicy byOrdinal(std::set<uint64_t> ix) {
        ForcePolicy f;
        f.mode = Mode::ByOrdinal;
        f.ordinals = std::move(ix);
        return f;
    }
};

struct RunResult {
    enum class Outcome { Stopped, FuelExhausted, RuntimeError };
    Outcome outcome = Outcome::FuelExhausted;
    RuntimeError error{ErrKind::None, "", "", "", ""};
    Trace trace;
    uint64_t steps = 0;

    bool stopped() const { return outcome == Outcome::Stopped; }
    std::string outcomeString() const; // stopped | fuel | error:<kind>@F.V.L
};

// Debug-time validation hooks (scope agreement, constant-fact soundness).
struct RunHooks {
    // called before each step with the current configuration
    std::function<void(const Configuration&)> onStep;
};

struct RunOptions {
    uint64_t fuel = 1000000;
    ForcePolicy force;
    const RunHooks* hooks = nullptr;
};

Configuration startConfiguration(const Program& p);
// One small step; returns the action it emitted, if any. The caller owns the
// input cursor. Throws EvalError for stuck states.
std::optional<Action> step(Configuration& c, const std::vector<Lit>& inputs, size_t& inputCursor,
                           uint64_t& assumeOrdinal, const ForcePolicy& force);

RunResult run(const Program& p, const std::vector<Lit>& inputs, uint64_t fuel);
RunResult run(const Program& p, const std::vector<Lit>& inputs, const RunOptions& opts);
RunResult runForcingDeopt(const Program& p, const std::vector<Lit>& inputs, uint64_t fuel,
                          const ForcePolicy& policy);

// All static assume sites of a program, in stream order.
std::vector<std::tuple<FunName, VersionName, Label>> assumeSites(const Program& p);

} // namespace sourir

#endif
