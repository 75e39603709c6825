#include <doctest.h>

#include "sourir/ir.h"
#include "sourir/text.h"

#include "helpers.h"

#include <random>

using namespace sourir;

TEST_CASE("lookup finds instructions by label") {
    InstructionStream s{{"L1", Instr::stop()}};
    CHECK(lookup(s, "L1") == Instr::stop());
    CHECK_THROWS_WITH_AS(lookup(s, "L2"), doctest::Contains("UnknownLabel"), IrError);
}

TEST_CASE("lookup on the size base version") {
    Program p = test::fixture("fig5.sourir");
    const Version* vb = p.function("size")->version("Vb");
    REQUIRE(vb);
    const Instr& i = lookup(vb->instrs, "L4");
    CHECK(i.kind == Instr::Kind::Return);
    CHECK(i.expr == Expr::literal(Lit::integer(0)));
}

TEST_CASE("successors per instruction kind") {
    Program p = parse("func main()\n"
                      "  version V1\n"
                      "    L0: var x = 1\n"
                      "    L1: branch x == 1 L2 L3\n"
                      "    L2: goto L4\n"
                      "    L3: print x\n"
                      "    L4: stop\n");
    const InstructionStream& s = p.function("main")->active().instrs;
    CHECK(successors(s, "L0") == std::set<Label>{"L1"}); // fall-through
    CHECK(successors(s, "L1") == std::set<Label>{"L2", "L3"});
    CHECK(successors(s, "L2") == std::set<Label>{"L4"});
    CHECK(successors(s, "L3") == std::set<Label>{"L4"});
    CHECK(successors(s, "L4") == std::set<Label>{});
    SUBCASE("fall-through at the end is an error") {
        InstructionStream bad{{"L0", Instr::print(Expr::literal(Lit::integer(1)))}};
        CHECK_THROWS_WITH_AS(successors(bad, "L0"), doctest::Contains("FallThroughEnd"), IrError);
    }
}

TEST_CASE("predecessors invert successors") {
    Program p = parse("func main()\n"
                      "  version V1\n"
                      "    L0: var x = 1\n"
                      "    L1: branch x == 1 La Lb\n"
                      "    La: x <- 2\n"
                      "        goto Lj\n"
                      "    Lb: x <- 3\n"
                      "        goto Lj\n"
                      "    Lj: stop\n");
    const InstructionStream& s = p.function("main")->active().instrs;
    CHECK(predecessors(s, "L0") == std::set<Label>{});
    CHECK(predecessors(s, "Lj") == std::set<Label>{"_0", "_1"}); // the two gotos
    CHECK(predecessors(s, "La") == std::set<Label>{"L1"});

    // brute-force inversion: the edge sets must agree
    for (auto& e : s) {
        for (auto& succ : successors(s, e.label))
            CHECK(predecessors(s, succ).count(e.label));
        for (auto& pred : predecessors(s, e.label))
            CHECK(successors(s, pred).count(e.label));
    }
}

TEST_CASE("label after an assume in straight-line code") {
    InstructionStream s{
        {"A0", Instr::assume({Expr::literal(Lit::boolean(true))},
                             {"main", "V1", "K0", {}}, {})},
        {"K0", Instr::varDecl("y", Expr::literal(Lit::integer(1)))},
        {"K1", Instr::stop()},
    };
    CHECK(predecessors(s, "K0") == std::set<Label>{"A0"});
}

TEST_CASE("freshName picks the smallest free suffix") {
    CHECK(freshName("x", {}) == "x");
    CHECK(freshName("x", {"x"}) == "x_1");
    CHECK(freshName("x", {"x", "x_1"}) == "x_2");
    std::set<std::string> used{"x", "x_1", "x_2", "y"};
    std::string got = freshName("x", used);
    CHECK(!used.count(got));
}

TEST_CASE("substitute keeps expressions flat") {
    Expr compound =
        Expr::binop(Primop::Add, SimpleExpr::var("x"), SimpleExpr::literal(Lit::integer(1)));
    SUBCASE("whole simple expression replaced by anything") {
        auto got = substitute(Expr::var("y"), {{"y", compound}});
        REQUIRE(got);
        CHECK(*got == compound);
    }
    SUBCASE("operand replaced by a simple expression") {
        auto got = substitute(compound, {{"x", Expr::literal(Lit::integer(5))}});
        REQUIRE(got);
        CHECK(*got == Expr::binop(Primop::Add, SimpleExpr::literal(Lit::integer(5)),
                                  SimpleExpr::literal(Lit::integer(1))));
    }
    SUBCASE("operand replaced by a compound has no flat form") {
        CHECK(!substitute(compound, {{"x", compound}}));
    }
}

TEST_CASE("edge sets from successors and predecessors coincide on random streams") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        size_t n = 2 + rng() % 8;
        InstructionStream s;
        for (size_t i = 0; i < n; ++i)
            s.push_back({"L" + std::to_string(i), Instr::print(Expr::literal(Lit::integer(1)))});
        for (size_t i = 0; i < n; ++i) {
            switch (rng() % 3) {
            case 0:
                s[i].instr = Instr::gotoL("L" + std::to_string(rng() % n));
                break;
            case 1:
                s[i].instr = Instr::branch(Expr::literal(Lit::boolean(true)),
                                           "L" + std::to_string(rng() % n),
                                           "L" + std::to_string(rng() % n));
                break;
            default:
                break;
            }
        }
        s.push_back({"Lend", Instr::stop()});
        std::set<std::pair<Label, Label>> fromSucc, fromPred;
        for (auto& e : s)
            for (auto& t : successors(s, e.label))
                fromSucc.insert({e.label, t});
        for (auto& e : s)
            for (auto& t : predecessors(s, e.label))
                fromPred.insert({t, e.label});
        CHECK(fromSucc == fromPred);
    }
}
