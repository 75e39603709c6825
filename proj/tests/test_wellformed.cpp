#include <doctest.h>

#include "sourir/text.h"
#include "sourir/wellformed.h"

#include "helpers.h"

using namespace sourir;

namespace {
bool hasCode(const std::vector<Diagnostic>& diags, DiagCode code) {
    for (auto& d : diags)
        if (d.code == code)
            return true;
    return false;
}
} // namespace

TEST_CASE("every figure fixture is well-formed") {
    const char* files[] = {"fig2.sourir",  "fig4.sourir", "fig5.sourir",  "fig6.sourir",
                           "fig7.sourir",  "fig8.sourir", "fig13.sourir", "fig14.sourir",
                           "fig4_vw.sourir", "compose_micro.sourir"};
    for (auto* f : files) {
        CAPTURE(f);
        auto diags = checkProgram(test::fixture(f));
        CHECK_MESSAGE(diags.empty(), renderDiagnostics(diags));
    }
}

TEST_CASE("main must end with stop") {
    Program p = parse("func main()\n  version V1\n    return 0\n");
    CHECK(hasCode(checkProgram(p), DiagCode::MainMissingStop));
}

TEST_CASE("two declarations of one name in a stream") {
    Program p = parse("func main()\n  version V1\n    var x = 1\n    drop x\n"
                      "    var x = 1\n    stop\n");
    CHECK(hasCode(checkProgram(p), DiagCode::DuplicateDecl));
    // ... even across branch arms
    Program q = parse("func main()\n  version V1\n"
                      "    var c = true\n"
                      "    branch c La Lb\n"
                      "    La: var y = 1\n"
                      "        drop y\n"
                      "        goto Lj\n"
                      "    Lb: var y = 2\n"
                      "        drop y\n"
                      "        goto Lj\n"
                      "    Lj: stop\n");
    CHECK(hasCode(checkProgram(q), DiagCode::DuplicateDecl));
}

TEST_CASE("unknown function reference") {
    Program p = parse("func main()\n  version V1\n    var f = &ghost\n    stop\n");
    CHECK(hasCode(checkProgram(p), DiagCode::UnknownFunction));
}

TEST_CASE("fall-through off the end") {
    Program p = parse("func main()\n  version V1\n    stop\n"
                      "func f()\n  version V1\n    var x = 1\n");
    CHECK(hasCode(checkProgram(p), DiagCode::FallThroughEnd));
}

TEST_CASE("unknown jump target") {
    Program p = parse("func main()\n  version V1\n    goto Lx\n    stop\n");
    CHECK(hasCode(checkProgram(p), DiagCode::UnknownLabel));
}

TEST_CASE("use of out-of-scope variables") {
    Program p = parse("func main()\n  version V1\n    print y\n    stop\n");
    CHECK(hasCode(checkProgram(p), DiagCode::UnboundVariable));
    Program q = parse("func main()\n  version V1\n    var x = 1\n    drop x\n"
                      "    print x\n    stop\n");
    CHECK(hasCode(checkProgram(q), DiagCode::UnboundVariable));
}

TEST_CASE("branch arm declaring a variable must drop it before the join") {
    Program p = parse("func main()\n  version V1\n"
                      "    var c = true\n"
                      "    branch c La Lj\n"
                      "    La: var y = 1\n"
                      "        goto Lj\n"
                      "    Lj: stop\n");
    CHECK(hasCode(checkProgram(p), DiagCode::ScopeMismatch));
}

TEST_CASE("deopt target must exist and the varmap must match its scope") {
    Program missing = parse("func main()\n  version V2\n"
                            "    assume true else main.V1.Lx [x = 1]\n    stop\n"
                            "  version V1\n    stop\n");
    CHECK(hasCode(checkProgram(missing), DiagCode::BadDeoptTarget));

    Program narrow = parse("func main()\n  version V2\n"
                           "    assume true else main.V1.L1 []\n    stop\n"
                           "  version V1\n    var x = 1\n    L1: print x\n    stop\n");
    CHECK(hasCode(checkProgram(narrow), DiagCode::VarmapScopeMismatch));

    Program wide = parse("func main()\n  version V2\n"
                         "    assume true else main.V1.L1 [x = 1, y = 2]\n    stop\n"
                         "  version V1\n    var x = 1\n    L1: print x\n    stop\n");
    CHECK(hasCode(checkProgram(wide), DiagCode::VarmapScopeMismatch));
}

TEST_CASE("extra frame varmap excludes the return variable") {
    // scope at f.V1.L1 is {a, r}; the frame must bind exactly {a}
    std::string prefix = "func main()\n  version V1\n    stop\n"
                         "func g()\n  version V2\n"
                         "    assume true else g.V1.L0 [], f.V1.L1 ret r ";
    std::string suffix = "\n    return 0\n  version V1\n    L0: return 0\n"
                         "func f()\n  version V1\n"
                         "    var a = 1\n"
                         "    call r = g()\n"
                         "    L1: print r\n"
                         "    return 0\n";
    CHECK(checkProgram(parse(prefix + "[a = 1]" + suffix)).empty());
    CHECK(hasCode(checkProgram(parse(prefix + "[a = 1, r = 2]" + suffix)),
                  DiagCode::VarmapScopeMismatch));
    CHECK(hasCode(checkProgram(parse(prefix + "[]" + suffix)), DiagCode::VarmapScopeMismatch));
}

TEST_CASE("varmap names must be distinct") {
    Program p = parse("func main()\n  version V2\n"
                      "    assume true else main.V1.L1 [x = 1, x = 2]\n    stop\n"
                      "  version V1\n    var x = 1\n    L1: print x\n    stop\n");
    CHECK(hasCode(checkProgram(p), DiagCode::DuplicateDecl));
}

TEST_CASE("scopeAt on the size base version") {
    Program p = test::fixture("fig5.sourir");
    ScopeMap scopes = scopeAt(p, "size", "Vb");
    CHECK(scopes.at("L3") == std::set<VarName>{"el", "x"});
    CHECK(scopes.at("L1") == std::set<VarName>{"x"}); // parameters only at entry
}

TEST_CASE("scopeAt is independent of traversal order") {
    // two different layouts of the same diamond; scopes must agree per label
    Program p = parse("func main()\n  version V1\n"
                      "    var c = true\n"
                      "    branch c La Lb\n"
                      "    La: var y = 1\n"
                      "        drop y\n"
                      "        goto Lj\n"
                      "    Lb: goto Lj\n"
                      "    Lj: stop\n");
    Program q = parse("func main()\n  version V1\n"
                      "    var c = true\n"
                      "    branch c La Lb\n"
                      "    Lb: goto Lj\n"
                      "    La: var y = 1\n"
                      "        drop y\n"
                      "        goto Lj\n"
                      "    Lj: stop\n");
    ScopeMap sp = scopeAt(p, "main", "V1");
    ScopeMap sq = scopeAt(q, "main", "V1");
    for (auto& [label, scope] : sp)
        if (sq.count(label))
            CHECK(scope == sq.at(label));
    CHECK(sp.at("Lj") == std::set<VarName>{"c"});
}

TEST_CASE("scopeAt throws on inconsistent merges") {
    Program p = parse("func main()\n  version V1\n"
                      "    var c = true\n"
                      "    branch c La Lj\n"
                      "    La: var y = 1\n"
                      "        goto Lj\n"
                      "    Lj: stop\n");
    CHECK_THROWS_WITH_AS(scopeAt(p, "main", "V1"), doctest::Contains("ScopeMismatch"), IrError);
}

TEST_CASE("diagnostics render with location and code") {
    Program p = parse("func main()\n  version V1\n    return 0\n");
    auto diags = checkProgram(p);
    REQUIRE(!diags.empty());
    CHECK(diags[0].render() == "main.V1._0: MainMissingStop: "
                               "the last instruction of a main version must be stop");
}
