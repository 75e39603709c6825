#include "sourir/interp.h"

#include "sourir/text.h"

#include <algorithm>

namespace sourir {

Lit Value::toLit() const {
    switch (kind) {
    case Kind::Int:
        return Lit::integer(intval);
    case Kind::Bool:
        return Lit::boolean(boolval);
    default:
        return Lit::nil();
    }
}

std::string printValue(const Value& v) {
    switch (v.kind) {
    case Value::Kind::Int:
        return std::to_string(v.intval);
    case Value::Kind::Bool:
        return v.boolval ? "true" : "false";
    case Value::Kind::Nil:
        return "nil";
    case Value::Kind::Fun:
        return "&" + v.fun;
    case Value::Kind::Addr:
        return "@" + std::to_string(v.addr);
    }
    return "?";
}

bool Environment::operator==(const Environment& o) const {
    if (slots.size() != o.slots.size())
        return false;
    for (auto& [name, v] : slots) {
        const Value* ov = o.get(name);
        if (!ov || !(*ov == v))
            return false;
    }
    return true;
}

const char* errKindName(ErrKind k) {
    switch (k) {
    case ErrKind::None:
        return "None";
    case ErrKind::UnboundVariable:
        return "UnboundVariable";
    case ErrKind::UnknownLabel:
        return "UnknownLabel";
    case ErrKind::UnknownFunction:
        return "UnknownFunction";
    case ErrKind::TypeError:
        return "TypeError";
    case ErrKind::IndexOutOfBounds:
        return "IndexOutOfBounds";
    case ErrKind::DivisionByZero:
        return "DivisionByZero";
    case ErrKind::IntegerOverflow:
        return "IntegerOverflow";
    case ErrKind::CallArityMismatch:
        return "CallArityMismatch";
    case ErrKind::CalleeNotFunction:
        return "CalleeNotFunction";
    case ErrKind::ReturnFromMain:
        return "ReturnFromMain";
    case ErrKind::InputExhausted:
        return "InputExhausted";
    case ErrKind::BadDeoptTarget:
        return "BadDeoptTarget";
    case ErrKind::FallThroughEnd:
        return "FallThroughEnd";
    }
    return "?";
}

std::string printAction(const Action& a) {
    switch (a.kind) {
    case Action::Kind::Read:
        return "read " + print(a.lit);
    case Action::Kind::Print:
        return "print " + print(a.lit);
    case Action::Kind::Stop:
        return "stop";
    }
    return "?";
}

std::string printTrace(const Trace& t) {
    std::string out;
    for (auto& a : t)
        out += printAction(a) + "\n";
    return out;
}

std::string RunResult::outcomeString() const {
    switch (outcome) {
    case Outcome::Stopped:
        return "stopped";
    case Outcome::FuelExhausted:
        return "fuel";
    case Outcome::RuntimeError:
        return std::string("error:") + errKindName(error.kind) + "@" + error.fun + "." +
               error.version + "." + error.label;
    }
    return "?";
}

const InstructionStream& Configuration::instrs() const {
    static const InstructionStream empty;
    if (halted)
        return empty;
    const Function* f = program->function(fun);
    if (!f)
        throw EvalError(ErrKind::UnknownFunction, fun);
    const Version* v = f->version(version);
    if (!v)
        throw EvalError(ErrKind::BadDeoptTarget, fun + "." + version);
    return v->instrs;
}

bool configEqual(const Configuration& a, const Configuration& b) {
    if (a.halted != b.halted || a.fun != b.fun || a.version != b.version || a.pc != b.pc)
        return false;
    if (!(a.heap == b.heap) || !(a.env == b.env))
        return false;
    if (a.stack.size() != b.stack.size())
        return false;
    for (size_t i = 0; i < a.stack.size(); ++i) {
        auto& x = a.stack[i];
        auto& y = b.stack[i];
        if (x.fun != y.fun || x.version != y.version || x.returnPc != y.returnPc ||
            x.retVar != y.retVar || !(x.savedEnv == y.savedEnv))
            return false;
    }
    return true;
}

Value evalSimple(const Environment& env, const SimpleExpr& se) {
    switch (se.kind) {
    case SimpleExpr::Kind::Lit:
        return Value::fromLit(se.lit);
    case SimpleExpr::Kind::Var: {
        const Value* v = env.get(se.name);
        if (!v)
            throw EvalError(ErrKind::UnboundVariable, se.name);
        return *v;
    }
    case SimpleExpr::Kind::FunRef:
        return Value::funref(se.name);
    }
    throw EvalError(ErrKind::TypeError, "bad simple expression");
}

static int64_t requireInt(const Value& v, const char* what) {
    if (v.kind != Value::Kind::Int)
        throw EvalError(ErrKind::TypeError, std::string(what) + " requires an integer, got " +
                                                printValue(v));
    return v.intval;
}

static bool requireBool(const Value& v, const char* what) {
    if (v.kind != Value::Kind::Bool)
        throw EvalError(ErrKind::TypeError,
                        std::string(what) + " requires a boolean, got " + printValue(v));
    return v.boolval;
}

static const std::vector<Value>& requireBlock(const Heap& heap, const Value& v) {
    if (v.kind != Value::Kind::Addr)
        throw EvalError(ErrKind::TypeError, "expected an array, got " + printValue(v));
    if (v.addr >= heap.blocks.size())
        throw EvalError(ErrKind::IndexOutOfBounds, "dangling address");
    return heap.blocks[v.addr];
}

Value eval(const Heap& heap, const Environment& env, const Expr& e) {
    switch (e.kind) {
    case Expr::Kind::Simple:
        return evalSimple(env, e.operands[0]);
    case Expr::Kind::ArrayRead: {
        Value base = evalSimple(env, e.operands[0]);
        const std::vector<Value>& block = requireBlock(heap, base);
        int64_t ix = requireInt(evalSimple(env, e.operands[1]), "array index");
        if (ix < 0 || (size_t)ix >= block.size())
            throw EvalError(ErrKind::IndexOutOfBounds,
                            "index " + std::to_string(ix) + " of a block of length " +
                                std::to_string(block.size()));
        return block[(size_t)ix];
    }
    case Expr::Kind::Length: {
        Value base = evalSimple(env, e.operands[0]);
        return Value::integer((int64_t)requireBlock(heap, base).size());
    }
    case Expr::Kind::Primop:
        break;
    }
    auto arith = [&](auto fn, const char* what) {
        int64_t a = requireInt(evalSimple(env, e.operands[0]), what);
        int64_t b = requireInt(evalSimple(env, e.operands[1]), what);
        int64_t out = 0;
        if (fn(a, b, &out))
            throw EvalError(ErrKind::IntegerOverflow, what);
        return Value::integer(out);
    };
    auto compare = [&](auto fn, const char* what) {
        int64_t a = requireInt(evalSimple(env, e.operands[0]), what);
        int64_t b = requireInt(evalSimple(env, e.operands[1]), what);
        return Value::boolean(fn(a, b));
    };
    switch (e.op) {
    case Primop::Add:
        return arith([](int64_t a, int64_t b, int64_t* o) { return __builtin_add_overflow(a, b, o); },
                     "+");
    case Primop::Sub:
        return arith([](int64_t a, int64_t b, int64_t* o) { return __builtin_sub_overflow(a, b, o); },
                     "-");
    case Primop::Mul:
        return arith([](int64_t a, int64_t b, int64_t* o) { return __builtin_mul_overflow(a, b, o); },
                     "*");
    case Primop::Div: {
        int64_t a = requireInt(evalSimple(env, e.operands[0]), "/");
        int64_t b = requireInt(evalSimple(env, e.operands[1]), "/");
        if (b == 0)
            throw EvalError(ErrKind::DivisionByZero, std::to_string(a) + " / 0");
        if (a == INT64_MIN && b == -1)
            throw EvalError(ErrKind::IntegerOverflow, "/");
        return Value::integer(a / b); // truncates toward zero
    }
    case Primop::Eq:
        return Value::boolean(evalSimple(env, e.operands[0]) == evalSimple(env, e.operands[1]));
    case Primop::Ne:
        return Value::boolean(!(evalSimple(env, e.operands[0]) == evalSimple(env, e.operands[1])));
    case Primop::Lt:
        return compare([](int64_t a, int64_t b) { return a < b; }, "<");
    case Primop::Le:
        return compare([](int64_t a, int64_t b) { return a <= b; }, "<=");
    case Primop::Gt:
        return compare([](int64_t a, int64_t b) { return a > b; }, ">");
    case Primop::Ge:
        return compare([](int64_t a, int64_t b) { return a >= b; }, ">=");
    case Primop::And: {
        bool a = requireBool(evalSimple(env, e.operands[0]), "&&");
        bool b = requireBool(evalSimple(env, e.operands[1]), "&&");
        return Value::boolean(a && b);
    }
    case Primop::Or: {
        bool a = requireBool(evalSimple(env, e.operands[0]), "||");
        bool b = requireBool(evalSimple(env, e.operands[1]), "||");
        return Value::boolean(a || b);
    }
    case Primop::Not:
        return Value::boolean(!requireBool(evalSimple(env, e.operands[0]), "!"));
    case Primop::Neg: {
        int64_t a = requireInt(evalSimple(env, e.operands[0]), "unary -");
        if (a == INT64_MIN)
            throw EvalError(ErrKind::IntegerOverflow, "unary -");
        return Value::integer(-a);
    }
    }
    throw EvalError(ErrKind::TypeError, "bad primop");
}

Environment evalVarmap(const Heap& heap, const Environment& env, const Varmap& vm) {
    Environment fresh;
    for (auto& b : vm)
        fresh.set(b.name, eval(heap, env, b.expr));
    return fresh;
}

static size_t pcOfLabel(const Program& p, const FunName& f, const VersionName& v, const Label& l) {
    const Function* fun = p.function(f);
    if (!fun)
        throw EvalError(ErrKind::BadDeoptTarget, "unknown function " + f);
    const Version* ver = fun->version(v);
    if (!ver)
        throw EvalError(ErrKind::BadDeoptTarget, "unknown version " + f + "." + v);
    for (size_t i = 0; i < ver->instrs.size(); ++i)
        if (ver->instrs[i].label == l)
            return i;
    throw EvalError(ErrKind::BadDeoptTarget, "unknown label " + f + "." + v + "." + l);
}

Configuration deoptimize(const Configuration& c, const DeoptTarget& target,
                         const std::vector<ExtraFrame>& frames) {
    Configuration out = c;
    out.fun = target.fun;
    out.version = target.version;
    out.pc = pcOfLabel(*c.program, target.fun, target.version, target.label);
    out.env = evalVarmap(c.heap, c.env, target.varmap);
    // the first listed frame is the immediate caller, i.e. the top of stack:
    // push in reverse listed order
    for (auto it = frames.rbegin(); it != frames.rend(); ++it) {
        Continuation k;
        k.fun = it->fun;
        k.version = it->version;
        k.returnPc = pcOfLabel(*c.program, it->fun, it->version, it->label);
        k.retVar = it->retVar;
        k.savedEnv = evalVarmap(c.heap, c.env, it->varmap);
        out.stack.push_back(std::move(k));
    }
    return out;
}

Configuration startConfiguration(const Program& p) {
    Configuration c;
    c.program = &p;
    const Function* main = p.function("main");
    if (!main)
        throw EvalError(ErrKind::UnknownFunction, "main");
    c.fun = "main";
    c.version = main->active().name;
    c.pc = 0;
    return c;
}

std::optional<Action> step(Configuration& c, const std::vector<Lit>& inputs, size_t& inputCursor,
                           uint64_t& assumeOrdinal, const ForcePolicy& force) {
    const InstructionStream& stream = c.instrs();
    if (c.halted || c.pc >= stream.size())
        throw EvalError(ErrKind::FallThroughEnd, "no instruction to execute");
    const InstrEntry& entry = stream[c.pc];
    const Instr& i = entry.instr;

    auto next = [&]() {
        if (c.pc + 1 >= stream.size())
            throw EvalError(ErrKind::FallThroughEnd, "fell off the end after " + entry.label);
        ++c.pc;
    };
    auto jump = [&](const Label& l) {
        c.pc = pcOfLabel(*c.program, c.fun, c.version, l);
    };

    switch (i.kind) {
    case Instr::Kind::VarDecl:
        c.env.set(i.var, eval(c.heap, c.env, i.expr));
        next();
        return std::nullopt;
    case Instr::Kind::Drop:
        if (!c.env.get(i.var))
            throw EvalError(ErrKind::UnboundVariable, i.var);
        c.env.remove(i.var);
        next();
        return std::nullopt;
    case Instr::Kind::Assign:
        if (!c.env.get(i.var))
            throw EvalError(ErrKind::UnboundVariable, i.var);
        c.env.set(i.var, eval(c.heap, c.env, i.expr));
        next();
        return std::nullopt;
    case Instr::Kind::ArrayAlloc: {
        int64_t n = requireInt(eval(c.heap, c.env, i.expr), "array size");
        if (n < 0)
            throw EvalError(ErrKind::IndexOutOfBounds, "negative array size");
        c.env.set(i.var, Value::address(c.heap.alloc(std::vector<Value>((size_t)n))));
        next();
        return std::nullopt;
    }
    case Instr::Kind::ArrayLit: {
        std::vector<Value> block;
        block.reserve(i.args.size());
        for (auto& a : i.args)
            block.push_back(eval(c.heap, c.env, a));
        c.env.set(i.var, Value::address(c.heap.alloc(std::move(block))));
        next();
        return std::nullopt;
    }
    case Instr::Kind::ArrayStore: {
        const Value* base = c.env.get(i.var);
        if (!base)
            throw EvalError(ErrKind::UnboundVariable, i.var);
        if (base->kind != Value::Kind::Addr)
            throw EvalError(ErrKind::TypeError, i.var + " is not an array");
        int64_t ix = requireInt(eval(c.heap, c.env, i.index), "array index");
        Value v = eval(c.heap, c.env, i.expr);
        auto& block = c.heap.blocks[base->addr];
        if (ix < 0 || (size_t)ix >= block.size())
            throw EvalError(ErrKind::IndexOutOfBounds, "store at " + std::to_string(ix));
        block[(size_t)ix] = std::move(v);
        next();
        return std::nullopt;
    }
    case Instr::Kind::Branch: {
        Value cond = eval(c.heap, c.env, i.expr);
        jump(requireBool(cond, "branch") ? i.l1 : i.l2);
        return std::nullopt;
    }
    case Instr::Kind::Goto:
        jump(i.l1);
        return std::nullopt;
    case Instr::Kind::Print: {
        Value v = eval(c.heap, c.env, i.expr);
        if (!v.isLit())
            throw EvalError(ErrKind::TypeError, "print of a non-literal value " + printValue(v));
        next();
        return Action::print(v.toLit());
    }
    case Instr::Kind::Read: {
        if (!c.env.get(i.var))
            throw EvalError(ErrKind::UnboundVariable, i.var);
        if (inputCursor >= inputs.size())
            throw EvalError(ErrKind::InputExhausted, "read past the end of the input script");
        Lit l = inputs[inputCursor++];
        c.env.set(i.var, Value::fromLit(l));
        next();
        return Action::read(l);
    }
    case Instr::Kind::Call: {
        Value callee = eval(c.heap, c.env, i.callee);
        if (callee.kind != Value::Kind::Fun)
            throw EvalError(ErrKind::CalleeNotFunction, printValue(callee));
        const Function* target = c.program->function(callee.fun);
        if (!target)
            throw EvalError(ErrKind::UnknownFunction, callee.fun);
        if (target->params.size() != i.args.size())
            throw EvalError(ErrKind::CallArityMismatch,
                            callee.fun + " expects " + std::to_string(target->params.size()) +
                                " arguments, got " + std::to_string(i.args.size()));
        Environment calleeEnv;
        for (size_t k = 0; k < i.args.size(); ++k)
            calleeEnv.set(target->params[k], eval(c.heap, c.env, i.args[k]));
        if (c.pc + 1 >= stream.size())
            throw EvalError(ErrKind::FallThroughEnd, "call with no return point");
        Continuation k;
        k.fun = c.fun;
        k.version = c.version;
        k.returnPc = c.pc + 1;
        k.retVar = i.var;
        k.savedEnv = std::move(c.env);
        c.stack.push_back(std::move(k));
        c.fun = target->name;
        c.version = target->active().name;
        c.pc = 0;
        c.env = std::move(calleeEnv);
        return std::nullopt;
    }
    case Instr::Kind::Return: {
        Value v = eval(c.heap, c.env, i.expr);
        if (c.stack.empty())
            throw EvalError(ErrKind::ReturnFromMain, "return with an empty stack");
        Continuation k = std::move(c.stack.back());
        c.stack.pop_back();
        c.fun = std::move(k.fun);
        c.version = std::move(k.version);
        c.pc = k.returnPc;
        c.env = std::move(k.savedEnv);
        c.env.set(k.retVar, std::move(v));
        return std::nullopt;
    }
    case Instr::Kind::Stop:
        c.halted = true;
        return Action::stop();
    case Instr::Kind::Assume: {
        bool forced = false;
        switch (force.mode) {
        case ForcePolicy::Mode::None:
            break;
        case ForcePolicy::Mode::All:
            forced = true;
            break;
        case ForcePolicy::Mode::AtSite:
            forced = c.fun == force.fun && c.version == force.version &&
                     entry.label == force.label;
            break;
        case ForcePolicy::Mode::ByOrdinal:
            forced = force.ordinals.count(assumeOrdinal) > 0;
            break;
        }
        ++assumeOrdinal;
        // Predicates evaluate left-to-right, stopping at the first false;
        // a forced deopt evaluates the same prefix and discards the result.
        bool pass = true;
        for (auto& pred : i.predicates) {
            Value v = eval(c.heap, c.env, pred);
            if (v.kind != Value::Kind::Bool)
                throw EvalError(ErrKind::TypeError,
                                "assume predicate evaluated to " + printValue(v));
            if (!v.boolval) {
                pass = false;
                break;
            }
        }
        if (pass && !forced) {
            next();
            return std::nullopt;
        }
        Configuration deopted = deoptimize(c, i.target, i.frames);
        c = std::move(deopted);
        return std::nullopt;
    }
    }
    throw EvalError(ErrKind::TypeError, "bad instruction");
}

RunResult run(const Program& p, const std::vector<Lit>& inputs, const RunOptions& opts) {
    RunResult result;
    Configuration c;
    try {
        c = startConfiguration(p);
    } catch (const EvalError& e) {
        result.outcome = RunResult::Outcome::RuntimeError;
        result.error = {e.kind, "main", "", "", e.detail};
        return result;
    }
    size_t cursor = 0;
    uint64_t ordinal = 0;
    while (result.steps < opts.fuel) {
        if (c.halted)
            break;
        if (opts.hooks && opts.hooks->onStep)
            opts.hooks->onStep(c);
        FunName atFun = c.fun;
        VersionName atVersion = c.version;
        Label atLabel;
        try {
            if (c.pc < c.instrs().size())
                atLabel = c.label();
            auto action = step(c, inputs, cursor, ordinal, opts.force);
            ++result.steps;
            if (action)
                result.trace.push_back(*action);
            if (action && action->kind == Action::Kind::Stop) {
                result.outcome = RunResult::Outcome::Stopped;
                return result;
            }
        } catch (const EvalError& e) {
            result.outcome = RunResult::Outcome::RuntimeError;
            result.error = {e.kind, atFun, atVersion, atLabel, e.detail};
            return result;
        }
    }
    result.outcome = c.halted ? RunResult::Outcome::Stopped : RunResult::Outcome::FuelExhausted;
    return result;
}

RunResult run(const Program& p, const std::vector<Lit>& inputs, uint64_t fuel) {
    RunOptions opts;
    opts.fuel = fuel;
    return run(p, inputs, opts);
}

RunResult runForcingDeopt(const Program& p, const std::vector<Lit>& inputs, uint64_t fuel,
                          const ForcePolicy& policy) {
    RunOptions opts;
    opts.fuel = fuel;
    opts.force = policy;
    return run(p, inputs, opts);
}

std::vector<std::tuple<FunName, VersionName, Label>> assumeSites(const Program& p) {
    std::vector<std::tuple<FunName, VersionName, Label>> out;
    for (auto& f : p.functions)
        for (auto& v : f.versions)
            for (auto& e : v.instrs)
                if (e.instr.kind == Instr::Kind::Assume)
                    out.emplace_back(f.name, v.name, e.label);
    return out;
}

} // namespace sourir
