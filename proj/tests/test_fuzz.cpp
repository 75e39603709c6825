#include <doctest.h>

#include "sourir/equivalence.h"
#include "sourir/fuzz.h"
#include "sourir/text.h"
#include "sourir/wellformed.h"

#include "helpers.h"

using namespace sourir;

TEST_CASE("generation is deterministic in the seed") {
    GenConfig cfg;
    cfg.seed = 42;
    Program a = genProgram(cfg);
    Program b = genProgram(cfg);
    CHECK(a == b);
    CHECK(genInputs(cfg, a) == genInputs(cfg, b));
    auto pa = genPipeline(cfg, a);
    auto pb = genPipeline(cfg, b);
    REQUIRE(pa.size() == pb.size());
    for (size_t i = 0; i < pa.size(); ++i)
        CHECK(printInvocation(pa[i]) == printInvocation(pb[i]));
    cfg.seed = 43;
    CHECK(!(genProgram(cfg) == a));
}

TEST_CASE("generated programs are always well-formed") {
    GenConfig cfg;
    for (uint64_t seed = 1; seed <= 300; ++seed) {
        cfg.seed = seed;
        Program p = genProgram(cfg);
        auto diags = checkProgram(p);
        CAPTURE(seed);
        CHECK_MESSAGE(diags.empty(), renderDiagnostics(diags));
    }
}

TEST_CASE("generated inputs only draw from the pool") {
    GenConfig cfg;
    cfg.seed = 5;
    cfg.literalPool = {Lit::integer(0), Lit::integer(1), Lit::nil()};
    Program p = genProgram(cfg);
    auto inputs = genInputs(cfg, p);
    CHECK(!inputs.empty());
    for (auto& l : inputs)
        CHECK((l == Lit::integer(0) || l == Lit::integer(1) || l == Lit::nil()));
    SUBCASE("length covers the read count with slack") {
        size_t reads = 0;
        for (auto& f : p.functions)
            for (auto& v : f.versions)
                for (auto& e : v.instrs)
                    if (e.instr.kind == Instr::Kind::Read)
                        ++reads;
        CHECK(inputs.size() >= reads * 3);
    }
}

TEST_CASE("generated pipelines satisfy their own preconditions") {
    GenConfig cfg;
    for (uint64_t seed = 1; seed <= 100; ++seed) {
        cfg.seed = seed;
        Program p = genProgram(cfg);
        auto pipeline = genPipeline(cfg, p);
        CAPTURE(seed);
        REQUIRE(!pipeline.empty());
        CHECK(pipeline[0].name == "create-version");
        CHECK_NOTHROW((void)runPipeline(p, pipeline));
    }
}

TEST_CASE("end-to-end fuzz property on a small batch") {
    GenConfig cfg;
    FuzzOptions opts;
    opts.scriptsPerCase = 2;
    auto results = runFuzzBatch(cfg, 1000, 60, opts, 4);
    int equal = 0, inconclusive = 0;
    for (auto& c : results) {
        CAPTURE(c.seed);
        CHECK_MESSAGE(c.ok, c.failure);
        equal += c.equal;
        inconclusive += c.inconclusive;
    }
    CHECK(equal + inconclusive == 120);
    CHECK(equal >= 114); // >= 95%
}

TEST_CASE("constant facts hold dynamically on fuzzed programs") {
    GenConfig cfg;
    for (uint64_t seed = 500; seed < 540; ++seed) {
        cfg.seed = seed;
        Program p = genProgram(cfg);
        auto inputs = genInputs(cfg, p);
        ValidationReport r = runValidated(p, inputs, 20000);
        CAPTURE(seed);
        CHECK_MESSAGE(r.ok, r.violation);
    }
}

TEST_CASE("parse and print of generator configs") {
    GenConfig cfg = parseGenConfig("maxFunctions=5\nmaxVersions=2\n"
                                   "weight.print=50\nliteralPool=0,1,nil\nseed=9\n");
    CHECK(cfg.maxFunctions == 5);
    CHECK(cfg.maxVersions == 2);
    CHECK(cfg.weights.at("print") == 50);
    CHECK(cfg.literalPool.size() == 3);
    CHECK(cfg.seed == 9);
}

TEST_CASE("reproducers carry the full case") {
    GenConfig cfg;
    FuzzOptions opts;
    auto c = runFuzzCase(cfg, 77, opts);
    REQUIRE(c.ok);
    CHECK(!c.programText.empty());
    CHECK(!c.pipelineText.empty());
    Program p = parse(c.programText);
    CHECK(checkProgram(p).empty());
    CHECK_NOTHROW((void)runPipeline(p, parsePipeline(c.pipelineText)));
}
