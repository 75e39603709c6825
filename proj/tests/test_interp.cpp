#include <doctest.h>

#include "sourir/equivalence.h"
#include "sourir/interp.h"
#include "sourir/text.h"
#include "sourir/wellformed.h"

#include "helpers.h"

using namespace sourir;

namespace {
Trace traceOf(const Program& p, const std::vector<Lit>& inputs = {}, uint64_t fuel = 100000) {
    return run(p, inputs, fuel).trace;
}
} // namespace

TEST_CASE("evalSimple") {
    Environment env;
    CHECK(evalSimple(env, SimpleExpr::literal(Lit::integer(5))) == Value::integer(5));
    env.set("x", Value::integer(3));
    CHECK(evalSimple(env, SimpleExpr::var("x")) == Value::integer(3));
    CHECK(evalSimple(env, SimpleExpr::funref("size")) == Value::funref("size"));
    CHECK_THROWS_AS(evalSimple(env, SimpleExpr::var("y")), EvalError);
}

TEST_CASE("eval over the heap") {
    Heap heap;
    Address b = heap.alloc({Value::nil()});
    Address a = heap.alloc({Value::integer(4), Value::address(b)});
    Environment env;
    env.set("x", Value::address(a));
    CHECK(eval(heap, env, Expr::arrayRead(SimpleExpr::var("x"),
                                          SimpleExpr::literal(Lit::integer(0)))) ==
          Value::integer(4));
    CHECK(eval(heap, env, Expr::length(SimpleExpr::var("x"))) == Value::integer(2));
    auto indexError = [&](int64_t i) {
        try {
            eval(heap, env, Expr::arrayRead(SimpleExpr::var("x"),
                                            SimpleExpr::literal(Lit::integer(i))));
            return ErrKind::None;
        } catch (const EvalError& e) {
            return e.kind;
        }
    };
    CHECK(indexError(2) == ErrKind::IndexOutOfBounds);
    CHECK(indexError(-1) == ErrKind::IndexOutOfBounds);
}

TEST_CASE("division truncates toward zero") {
    Heap heap;
    Environment env;
    auto evalBin = [&](Primop op, int64_t a, int64_t b) {
        return eval(heap, env, Expr::binop(op, SimpleExpr::literal(Lit::integer(a)),
                                           SimpleExpr::literal(Lit::integer(b))));
    };
    CHECK(evalBin(Primop::Div, 7, 2) == Value::integer(3));
    CHECK(evalBin(Primop::Div, -7, 2) == Value::integer(-3));
    CHECK_THROWS_AS(evalBin(Primop::Div, 1, 0), EvalError);
    CHECK_THROWS_AS(evalBin(Primop::Div, INT64_MIN, -1), EvalError);
    CHECK_THROWS_AS(evalBin(Primop::Add, INT64_MAX, 1), EvalError);
    CHECK_THROWS_AS(evalBin(Primop::Mul, INT64_MAX, 2), EvalError);
}

TEST_CASE("equality is total, other ops are typed") {
    Heap heap;
    Environment env;
    env.set("a1", Value::address(heap.alloc({})));
    env.set("a2", Value::address(heap.alloc({})));
    auto evalText = [&](const std::string& s) { return eval(heap, env, parseExprText(s)); };
    CHECK(evalText("nil == nil") == Value::boolean(true));
    CHECK(evalText("nil == 0") == Value::boolean(false));
    CHECK(evalText("true != 1") == Value::boolean(true));
    CHECK(evalText("a1 == a1") == Value::boolean(true));  // address identity
    CHECK(evalText("a1 == a2") == Value::boolean(false));
    CHECK_THROWS_AS(evalText("1 && true"), EvalError);
    CHECK_THROWS_AS(evalText("nil < 1"), EvalError);
    CHECK_THROWS_AS(evalText("!3"), EvalError);
}

TEST_CASE("evalVarmap builds a fresh environment from the old one") {
    Heap heap;
    Environment env;
    env.set("x", Value::integer(5));
    Varmap vm{{"i", Expr::var("x")},
              {"j", Expr::binop(Primop::Add, SimpleExpr::var("x"),
                                SimpleExpr::literal(Lit::integer(1)))}};
    Environment fresh = evalVarmap(heap, env, vm);
    CHECK(fresh.domain() == std::set<VarName>{"i", "j"});
    CHECK(*fresh.get("i") == Value::integer(5));
    CHECK(*fresh.get("j") == Value::integer(6));
    // bindings never see each other: [y = x] with old x, not the new binding
    Environment env2;
    env2.set("x", Value::integer(1));
    Environment a = evalVarmap(heap, env2, Varmap{{"x", Expr::literal(Lit::integer(9))},
                                                  {"y", Expr::var("x")}});
    CHECK(*a.get("y") == Value::integer(1));
    CHECK(evalVarmap(heap, env, {}).domain().empty());
}

TEST_CASE("deoptimize replaces the environment and keeps the heap") {
    Program p = test::fixture("fig5.sourir");
    Configuration c = startConfiguration(p);
    c.fun = "size";
    c.version = "Vo";
    c.pc = 0;
    c.env.set("x", Value::nil());
    const Instr& assume = p.function("size")->version("Vo")->instrs[0].instr;
    Configuration after = deoptimize(c, assume.target, assume.frames);
    CHECK(after.fun == "size");
    CHECK(after.version == "Vb");
    CHECK(after.label() == "L2");
    CHECK(after.env.domain() == std::set<VarName>{"el", "x"});
    CHECK(*after.env.get("el") == Value::integer(32));
    CHECK(*after.env.get("x") == Value::nil());
    CHECK(after.heap == c.heap);
    CHECK(after.stack.size() == c.stack.size());
}

TEST_CASE("deoptimize with an extra frame synthesizes a continuation") {
    Program p = test::fixture("fig8.sourir");
    // run until the inlined assume is the current instruction
    Configuration c = startConfiguration(p);
    size_t cursor = 0;
    uint64_t ordinal = 0;
    std::vector<Lit> inputs;
    while (c.current().kind != Instr::Kind::Assume)
        step(c, inputs, cursor, ordinal, ForcePolicy::none());
    const Instr& assume = c.current();
    REQUIRE(assume.frames.size() == 1);
    Configuration after = deoptimize(c, assume.target, assume.frames);
    REQUIRE(after.stack.size() == c.stack.size() + 1);
    const Continuation& k = after.stack.back();
    CHECK(k.fun == "main");
    CHECK(k.version == "Vb");
    CHECK(k.retVar == "s");
    CHECK(k.savedEnv.domain() == std::set<VarName>{"pl", "vec"});
    CHECK(after.heap == c.heap);
    // empty frame list leaves the stack alone
    Configuration noFrames = deoptimize(c, assume.target, {});
    CHECK(noFrames.stack.size() == c.stack.size());
}

TEST_CASE("fig8 runs to print 128") {
    Program p = test::fixture("fig8.sourir");
    RunResult r = run(p, {}, 100000);
    CHECK(r.outcome == RunResult::Outcome::Stopped);
    CHECK(r.trace == Trace{Action::print(Lit::integer(128)), Action::stop()});
}

TEST_CASE("fig4 prints 42 when the speculation holds") {
    Program p = test::fixture("fig4.sourir");
    CHECK(traceOf(p, {Lit::integer(42)}) ==
          Trace{Action::read(Lit::integer(42)), Action::print(Lit::integer(42)), Action::stop()});
    // deopt path: any other value flows through the base version
    CHECK(traceOf(p, {Lit::integer(7)}) ==
          Trace{Action::read(Lit::integer(7)), Action::print(Lit::integer(7)), Action::stop()});
}

TEST_CASE("fuel") {
    Program p = test::fixture("fig8.sourir");
    RunResult r0 = run(p, {}, 0);
    CHECK(r0.outcome == RunResult::Outcome::FuelExhausted);
    CHECK(r0.trace.empty());
    SUBCASE("trace monotonicity in fuel") {
        RunResult full = run(p, {}, 100000);
        for (uint64_t fuel = 0; fuel <= full.steps; ++fuel) {
            RunResult r = run(p, {}, fuel);
            REQUIRE(r.trace.size() <= full.trace.size());
            CHECK(std::equal(r.trace.begin(), r.trace.end(), full.trace.begin()));
        }
    }
}

TEST_CASE("stop is final") {
    Program p = parse("func main()\n  version V1\n    stop\n    print 1\n    stop\n");
    RunResult r = run(p, {}, 100);
    CHECK(r.outcome == RunResult::Outcome::Stopped);
    CHECK(r.trace == Trace{Action::stop()});
    CHECK(r.steps == 1);
}

TEST_CASE("runtime errors are reified with their location") {
    Program p = parse("func main()\n  version V1\n    Lb: var x = 1 / 0\n    stop\n");
    RunResult r = run(p, {}, 100);
    CHECK(r.outcome == RunResult::Outcome::RuntimeError);
    CHECK(r.error.kind == ErrKind::DivisionByZero);
    CHECK(r.error.fun == "main");
    CHECK(r.error.label == "Lb");
    CHECK(r.outcomeString() == "error:DivisionByZero@main.V1.Lb");
}

TEST_CASE("read consumes the script and fails on exhaustion") {
    Program p = parse("func main()\n  version V1\n    var x = nil\n"
                      "    read x\n    read x\n    print x\n    stop\n");
    RunResult ok = run(p, {Lit::integer(1), Lit::integer(2)}, 100);
    CHECK(ok.trace == Trace{Action::read(Lit::integer(1)), Action::read(Lit::integer(2)),
                            Action::print(Lit::integer(2)), Action::stop()});
    RunResult starved = run(p, {Lit::integer(1)}, 100);
    CHECK(starved.outcome == RunResult::Outcome::RuntimeError);
    CHECK(starved.error.kind == ErrKind::InputExhausted);
    CHECK(starved.trace == Trace{Action::read(Lit::integer(1))});
}

TEST_CASE("call and return behavior") {
    Program arity = parse("func main()\n  version V1\n    call x = f(1, 2)\n    stop\n"
                          "func f(a)\n  version V1\n    return a\n");
    CHECK(run(arity, {}, 100).error.kind == ErrKind::CallArityMismatch);
    Program notFun = parse("func main()\n  version V1\n    var g = 3\n"
                           "    call x = g()\n    stop\n");
    CHECK(run(notFun, {}, 100).error.kind == ErrKind::CalleeNotFunction);
    Program retMain = parse("func main()\n  version V1\n    return 1\n    stop\n");
    CHECK(run(retMain, {}, 100).error.kind == ErrKind::ReturnFromMain);
    Program indirect = parse("func main()\n  version V1\n    var g = &f\n"
                             "    call x = g(20)\n    print x\n    stop\n"
                             "func f(a)\n  version V1\n    return a + 1\n");
    CHECK(traceOf(indirect) == Trace{Action::print(Lit::integer(21)), Action::stop()});
}

TEST_CASE("printing a non-literal value is a type error") {
    Program p = parse("func main()\n  version V1\n    array a = [1]\n    print a\n    stop\n");
    CHECK(run(p, {}, 100).error.kind == ErrKind::TypeError);
}

TEST_CASE("calls enter the active version") {
    Program p = parse("func main()\n  version V1\n    call x = f()\n    print x\n    stop\n"
                      "func f()\n  version Vnew\n    return 2\n  version Vold\n    return 1\n");
    CHECK(traceOf(p) == Trace{Action::print(Lit::integer(2)), Action::stop()});
}

TEST_CASE("assume passes on true predicates and deoptimizes on false ones") {
    Program p = parse("func main()\n  version V2\n"
                      "    var x = 1\n"
                      "    assume x == 1 else main.V1.L1 [x = x]\n"
                      "    print 100\n"
                      "    stop\n"
                      "  version V1\n"
                      "    var x = 1\n"
                      "    L1: print 200\n"
                      "    stop\n");
    CHECK(traceOf(p) == Trace{Action::print(Lit::integer(100)), Action::stop()});
    Program q = parse(print(p)); // same program, flip the predicate
    q.function("main")->version("V2")->instrs[1].instr.predicates[0] =
        parseExprText("x == 2");
    CHECK(traceOf(q) == Trace{Action::print(Lit::integer(200)), Action::stop()});
    // non-boolean predicate value is a type error
    q.function("main")->version("V2")->instrs[1].instr.predicates[0] = parseExprText("x + 1");
    CHECK(run(q, {}, 100).error.kind == ErrKind::TypeError);
}

TEST_CASE("forcing deoptimization") {
    Program fig5 = test::fixture("fig5.sourir");
    SUBCASE("forcing on a program with no assume changes nothing") {
        Program p = parse("func main()\n  version V1\n    print 9\n    stop\n");
        CHECK(run(p, {}, 100).trace == runForcingDeopt(p, {}, 100, ForcePolicy::all()).trace);
    }
    SUBCASE("fig5: forced and unforced agree on the array path") {
        std::vector<Lit> inputs{Lit::integer(2)};
        RunResult plain = run(fig5, inputs, 100000);
        RunResult forced = runForcingDeopt(fig5, inputs, 100000, ForcePolicy::all());
        CHECK(plain.trace == forced.trace); // both print 64
        CHECK(plain.trace[1] == Action::print(Lit::integer(64)));
    }
    SUBCASE("fig4 Vw shows the violation") {
        Program p = test::fixture("fig4_vw.sourir");
        std::vector<Lit> inputs{Lit::integer(7)};
        RunResult plain = run(p, inputs, 100000);
        RunResult forced = runForcingDeopt(p, inputs, 100000, ForcePolicy::all());
        CHECK(plain.trace[1] == Action::print(Lit::integer(7)));
        CHECK(forced.trace[1] == Action::print(Lit::integer(42)));
    }
    SUBCASE("by ordinal") {
        Program p = parse("func main()\n  version V2\n"
                          "    var x = 1\n"
                          "    L0: assume true else main.V1.L0 [x = x]\n"
                          "    print 1\n"
                          "    stop\n"
                          "  version V1\n"
                          "    var x = 1\n"
                          "    L0: print 2\n"
                          "    stop\n");
        CHECK(runForcingDeopt(p, {}, 100, ForcePolicy::byOrdinal({0})).trace ==
              Trace{Action::print(Lit::integer(2)), Action::stop()});
        CHECK(runForcingDeopt(p, {}, 100, ForcePolicy::byOrdinal({5})).trace ==
              Trace{Action::print(Lit::integer(1)), Action::stop()});
    }
}

TEST_CASE("determinism across repeated runs") {
    Program p = test::fixture("fig14.sourir");
    std::vector<Lit> inputs{Lit::integer(1), Lit::integer(2), Lit::integer(1), Lit::integer(8)};
    RunResult first = run(p, inputs, 100000);
    for (int i = 0; i < 10; ++i) {
        RunResult again = run(p, inputs, 100000);
        CHECK(again.trace == first.trace);
        CHECK(again.steps == first.steps);
        CHECK(again.outcome == first.outcome);
    }
}

TEST_CASE("heap is untouched across forced deoptimization") {
    Program p = test::fixture("fig8.sourir");
    Configuration c = startConfiguration(p);
    size_t cursor = 0;
    uint64_t ordinal = 0;
    std::vector<Lit> inputs;
    while (c.current().kind != Instr::Kind::Assume)
        step(c, inputs, cursor, ordinal, ForcePolicy::none());
    Heap before = c.heap;
    step(c, inputs, cursor, ordinal, ForcePolicy::all()); // AssumeDeopt
    CHECK(c.heap == before);
    CHECK(c.version == "Vb");
}

TEST_CASE("scope agreement and fact soundness hold along fixture runs") {
    struct Case {
        const char* file;
        std::vector<Lit> inputs;
    } cases[] = {
        {"fig2.sourir", {}},
        {"fig4.sourir", {Lit::integer(7)}},
        {"fig5.sourir", {Lit::integer(3)}},
        {"fig5.sourir", {Lit::nil()}},
        {"fig8.sourir", {}},
        {"fig13.sourir", {Lit::integer(7)}},
        {"fig14.sourir", {Lit::integer(1), Lit::integer(2), Lit::integer(1), Lit::integer(4)}},
    };
    for (auto& c : cases) {
        CAPTURE(c.file);
        ValidationReport r = runValidated(test::fixture(c.file), c.inputs, 100000);
        CHECK_MESSAGE(r.ok, r.violation);
    }
}
