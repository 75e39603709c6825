#ifndef SOURIR_EQUIVALENCE_H
#define SOURIR_EQUIVALENCE_H

#include "sourir/interp.h"
#include "sourir/ir.h"

#include <optional>
#include <string>
#include <vector>

namespace sourir {

struct DiffResult {
    enum class Verdict {
        Equal,
        Diverged,                     // traces differ at `position`
        OutcomeMismatch,              // same trace, different outcome class
        BothFuelExhaustedPrefixEqual, // inconclusive: neither run finished
    };
    Verdict verdict = Verdict::Equal;
    size_t position = 0;
    std::optional<Action> leftAction, rightAction;
    RunResult left, right;

    bool passed() const {
        return verdict == Verdict::Equal || verdict == Verdict::BothFuelExhaustedPrefixEqual;
    }
    std::string render() const; // EQUAL | DIVERGED at n: ... | OUTCOME ... | INCONCLUSIVE ...
};

DiffResult compareRuns(RunResult left, RunResult right, uint64_t fuel);

DiffResult diffPrograms(const Program& p1, const Program& p2, const std::vector<Lit>& inputs,
                        uint64_t fuel);

// Copy of `p` with version `v` of `f` moved to the front of the version list.
Program withActiveVersion(const Program& p, const FunName& f, const VersionName& v);

// Synthesized driver used when the function under test is not main: reads one
// literal per parameter, calls the function, prints the result, stops.
Program withReadArgsHarness(const Program& p, const FunName& f);

struct DiffVersionsOptions {
    bool synthesizeHarness = false; // wrap f in a read-args driver main
};

DiffResult diffVersions(const Program& p, const FunName& f, const VersionName& v1,
                        const VersionName& v2, const std::vector<Lit>& inputs, uint64_t fuel,
                        const DiffVersionsOptions& opts = {});

// run vs runForcingDeopt under one policy.
DiffResult checkTransparency(const Program& p, const std::vector<Lit>& inputs, uint64_t fuel,
                             const ForcePolicy& policy = ForcePolicy::all());

struct SweepEntry {
    FunName fun;
    VersionName version;
    Label label;
    DiffResult result;
};

// One forced run per static assume site.
std::vector<SweepEntry> sweepTransparency(const Program& p, const std::vector<Lit>& inputs,
                                          uint64_t fuel);

struct InputPlan {
    std::vector<std::vector<Lit>> scripts; // explicit scripts, when nonempty
    std::vector<Lit> pool;                 // else: every pool^reads tuple
    size_t reads = 0;

    std::vector<std::vector<Lit>> enumerate() const;
};

std::vector<std::pair<std::vector<Lit>, DiffResult>>
exhaustiveDiff(const Program& p1, const Program& p2, const InputPlan& plan, uint64_t fuel,
               bool collectAll = false);

struct ValidationReport {
    bool ok = true;
    std::string violation; // first violated invariant
    RunResult result;
};

// Instrumented run: at every step the environment domain must equal the
// static scope of the current label, and every Const/NotConst fact of the
// constant-propagation analysis must hold in the dynamic environment.
ValidationReport runValidated(const Program& p, const std::vector<Lit>& inputs, uint64_t fuel);

} // namespace sourir

#endif
