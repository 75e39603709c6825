#ifndef SOURIR_FUZZ_H
#define SOURIR_FUZZ_H

#include "sourir/ir.h"
#include "sourir/passes.h"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sourir {

struct GenConfig {
    uint64_t seed = 1;
    int maxFunctions = 3;       // callees besides main
    int maxVersions = 3;        // per function, including the base
    int maxInstructions = 22;   // body budget per version
    int maxArrayLength = 4;
    int maxCallDepth = 3;
    std::vector<Lit> literalPool = {Lit::integer(0),  Lit::integer(1), Lit::integer(2),
                                    Lit::integer(3),  Lit::integer(7), Lit::boolean(true),
                                    Lit::boolean(false), Lit::nil()};
    // relative weights per generated construct
    std::map<std::string, int> weights = {
        {"decl", 25},   {"assign", 15}, {"print", 18}, {"read", 10}, {"branch", 10},
        {"loop", 6},    {"array", 8},   {"store", 6},  {"load", 8},  {"call", 10},
    };
};

GenConfig parseGenConfig(const std::string& text); // key=value lines
std::string printGenConfig(const GenConfig& cfg);

// Deterministic in cfg.seed; the result always passes checkProgram.
Program genProgram(const GenConfig& cfg);

// Input script sized to feed every read with slack; deterministic in seed.
std::vector<Lit> genInputs(const GenConfig& cfg, const Program& p);

// Argument-valid pass pipeline: starts with create-version, then a random
// draw of passes whose preconditions hold on the evolving program.
std::vector<PassInvocation> genPipeline(const GenConfig& cfg, const Program& p);

struct FuzzCase {
    uint64_t seed = 0;
    bool ok = true;
    std::string failure;           // first violated property, empty when ok
    int scriptsRun = 0;
    int equal = 0;                 // diff verdict tallies across scripts
    int inconclusive = 0;
    // reproducer payloads
    std::string programText;
    std::string pipelineText;
    std::string inputsText;
    std::string reportText;
};

struct FuzzOptions {
    uint64_t fuel = 100000;
    int scriptsPerCase = 3;
};

// One end-to-end case: generate, optimize, diff, transparency-check.
FuzzCase runFuzzCase(const GenConfig& cfg, uint64_t seed, const FuzzOptions& opts);

// Seeded batch over a worker pool; results ordered by seed.
std::vector<FuzzCase> runFuzzBatch(const GenConfig& cfg, uint64_t firstSeed, int count,
                                   const FuzzOptions& opts, int threads);

// case-<seed>/{program.sourir,pipeline.txt,inputs.txt,report.txt}
void writeReproducer(const FuzzCase& c, const std::string& directory);

} // namespace sourir

#endif
