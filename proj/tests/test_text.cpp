#include <doctest.h>

#include "sourir/text.h"
#include "sourir/wellformed.h"

#include "helpers.h"

using namespace sourir;

TEST_CASE("assume line from the size example") {
    Program p = parse("func size(x)\n"
                      "  version Vo\n"
                      "    assume x != nil else size.Vb.L2 [el = 32, x = x]\n"
                      "    return 0\n"
                      "  version Vb\n"
                      "    L2: return 0\n"
                      "func main()\n"
                      "  version V1\n"
                      "    stop\n");
    const Instr& i = p.function("size")->active().instrs[0].instr;
    REQUIRE(i.kind == Instr::Kind::Assume);
    REQUIRE(i.predicates.size() == 1);
    CHECK(i.predicates[0] ==
          Expr::binop(Primop::Ne, SimpleExpr::var("x"), SimpleExpr::literal(Lit::nil())));
    CHECK(i.target.fun == "size");
    CHECK(i.target.version == "Vb");
    CHECK(i.target.label == "L2");
    REQUIRE(i.target.varmap.size() == 2);
    CHECK(i.target.varmap[0].name == "el");
    CHECK(i.target.varmap[0].expr == Expr::literal(Lit::integer(32)));
    CHECK(i.target.varmap[1].name == "x");
    CHECK(i.target.varmap[1].expr == Expr::var("x"));
    CHECK(i.frames.empty());
}

TEST_CASE("extra frames parse and print") {
    std::string line = "assume x != nil else size.Vb.L2 [el = 32, x = x], "
                       "main.Vb.Lret ret s [pl = pl, vec = vec]";
    Program p = parse("func main()\n  version V1\n    " + line + "\n    stop\n");
    const Instr& i = p.function("main")->active().instrs[0].instr;
    REQUIRE(i.frames.size() == 1);
    CHECK(i.frames[0].fun == "main");
    CHECK(i.frames[0].version == "Vb");
    CHECK(i.frames[0].label == "Lret");
    CHECK(i.frames[0].retVar == "s");
    CHECK(print(i) == line);
}

TEST_CASE("labels are synthesized in stream order") {
    Program p = parse("func main()\n"
                      "  version V1\n"
                      "    var x = 1\n"
                      "    Lx: print x\n"
                      "    stop\n");
    const InstructionStream& s = p.function("main")->active().instrs;
    CHECK(s[0].label == "_0");
    CHECK(s[1].label == "Lx");
    CHECK(s[2].label == "_1");
}

TEST_CASE("synthesized labels avoid user labels") {
    Program p = parse("func main()\n"
                      "  version V1\n"
                      "    _0: var x = 1\n"
                      "    print x\n"
                      "    stop\n");
    const InstructionStream& s = p.function("main")->active().instrs;
    CHECK(s[0].label == "_0");
    CHECK(s[1].label == "_1");
    CHECK(s[2].label == "_2");
}

TEST_CASE("nested expressions are rejected") {
    CHECK_THROWS_AS(parse("func main()\n  version V1\n    print (x + 1) * 2\n    stop\n"),
                    ParseError);
    CHECK_THROWS_AS(parse("func main()\n  version V1\n    var y = 1 + 2 + 3\n    stop\n"),
                    ParseError);
    CHECK_THROWS_AS(parse("func main()\n  version V1\n    var y = length(x) + 1\n    stop\n"),
                    ParseError);
}

TEST_CASE("negative corpus: forms outside the grammar") {
    const char* bad[] = {
        "func main()\n  version V1\n    x := 1\n    stop\n",
        "func main()\n  version V1\n    if x goto L\n    stop\n",
        "func main()\n  version V1\n    var = 3\n    stop\n",
        "func main()\n  version V1\n    branch x L1\n    stop\n",
        "func main()\n  version V1\n    assume else\n    stop\n",
        "func main()\n  version V1\n    call x = f(1\n    stop\n",
        "func main()\n  version V1\n    drop 3\n    stop\n",
        "func main()\n  version V1\n    return return\n    stop\n",
    };
    for (auto* text : bad)
        CHECK_THROWS_AS(parse(text), ParseError);
}

TEST_CASE("duplicate labels are a parse error") {
    CHECK_THROWS_AS(parse("func main()\n  version V1\n    L: var x = 1\n    L: stop\n"),
                    ParseError);
}

TEST_CASE("negative literals fold, unary minus stays an op") {
    Program p = parse("func main()\n"
                      "  version V1\n"
                      "    var a = -7\n"
                      "    var b = - a\n"
                      "    var c = a != -1\n"
                      "    var d = a - 1\n"
                      "    stop\n");
    const InstructionStream& s = p.function("main")->active().instrs;
    CHECK(s[0].instr.expr == Expr::literal(Lit::integer(-7)));
    CHECK(s[1].instr.expr == Expr::primop(Primop::Neg, {SimpleExpr::var("a")}));
    CHECK(s[2].instr.expr ==
          Expr::binop(Primop::Ne, SimpleExpr::var("a"), SimpleExpr::literal(Lit::integer(-1))));
    CHECK(s[3].instr.expr ==
          Expr::binop(Primop::Sub, SimpleExpr::var("a"), SimpleExpr::literal(Lit::integer(1))));
}

TEST_CASE("int64 extremes round-trip") {
    Program p = parse("func main()\n  version V1\n    var a = -9223372036854775808\n"
                      "    var b = 9223372036854775807\n    stop\n");
    const InstructionStream& s = p.function("main")->active().instrs;
    CHECK(s[0].instr.expr == Expr::literal(Lit::integer(INT64_MIN)));
    CHECK(s[1].instr.expr == Expr::literal(Lit::integer(INT64_MAX)));
    CHECK(parse(print(p)) == p);
}

TEST_CASE("round-trip on every fixture") {
    const char* files[] = {"fig2.sourir",  "fig4.sourir",      "fig4_vw.sourir",
                           "fig5.sourir",  "fig5_base.sourir", "fig6.sourir",
                           "fig7.sourir",  "fig8.sourir",      "fig8_base.sourir",
                           "fig13.sourir", "fig14.sourir",     "compose_micro.sourir"};
    for (auto* f : files) {
        CAPTURE(f);
        Program p = test::fixture(f);
        CHECK(parse(print(p)) == p);
    }
}

TEST_CASE("empty varmap prints as []") {
    Instr i = Instr::assume({}, {"f", "V", "L", {}}, {});
    CHECK(print(i) == "assume else f.V.L []");
    Program p = parse("func main()\n  version V1\n    " + print(i) + "\n    stop\n");
    CHECK(p.function("main")->active().instrs[0].instr == i);
}

TEST_CASE("input scripts") {
    auto lits = parseInputs("3, true, nil");
    REQUIRE(lits.size() == 3);
    CHECK(lits[0] == Lit::integer(3));
    CHECK(lits[1] == Lit::boolean(true));
    CHECK(lits[2] == Lit::nil());
    CHECK(parseInputs("").empty());
    CHECK(parseInputs("# only a comment\n").empty());
    CHECK(parseInputs("1\n2\n-3").size() == 3);
    CHECK_THROWS_AS(parseInputs("3; 4"), ParseError);
    CHECK_THROWS_AS(parseInputs("3 4"), ParseError);
    CHECK(parseInputs(printInputs(lits)) == lits);
}

TEST_CASE("call callee resolution") {
    Program p = parse("func main()\n  version V1\n    call a = helper()\n"
                      "    call b = &helper()\n    stop\n"
                      "func helper()\n  version V1\n    return 1\n");
    auto& s = p.function("main")->active().instrs;
    CHECK(s[0].instr.callee == Expr::simple(SimpleExpr::funref("helper")));
    CHECK(s[1].instr.callee == Expr::simple(SimpleExpr::funref("helper")));
    // unknown name stays a variable reference
    Program q = parse("func main()\n  version V1\n    var g = nil\n    call c = g()\n    stop\n");
    CHECK(q.function("main")->active().instrs[1].instr.callee == Expr::var("g"));
}
