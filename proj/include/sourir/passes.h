#ifndef SOURIR_PASSES_H
#define SOURIR_PASSES_H

#include "sourir/ir.h"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sourir {

// Constant-propagation lattice fact for one variable; a variable missing from
// the map is unknown.
struct AbstractValue {
    enum class Kind { Const, NotConst };
    Kind kind;
    Lit lit;
    bool operator==(const AbstractValue&) const = default;
};
using AbstractEnv = std::map<VarName, AbstractValue>;

// Mappings that agree are preserved, the rest become unknown.
AbstractEnv joinAbstract(const AbstractEnv& a, const AbstractEnv& b);
// Evaluate an expression under the static facts; nullopt when it does not
// fold (or folding would hide a runtime error).
std::optional<Lit> foldExpr(const AbstractEnv& env, const Expr& e);
// Facts on entry to every label of one version.
std::map<Label, AbstractEnv> constantFacts(const Program& p, const FunName& f,
                                           const VersionName& v);

struct PassReport {
    std::string pass;
    bool changed = false;
    int rewrites = 0;
    std::string notes;
};

enum class PassErrKind {
    DuplicateVersionLabel,
    BadDeoptTarget,
    NotAnAssume,
    UnboundVariable,
    NotADirectCall,
    NotACall,
    MoveConditionViolated,
    OutOfScope,
    PredIndexOutOfRange,
    NotTrivial,
    TargetNotAssume,
    WouldNestExpression,
    UnknownFunction,
    UnknownVersion,
    UnknownLabel,
    IllFormed,
    PipelineAborted,
};

const char* passErrKindName(PassErrKind k);

class PassError : public std::runtime_error {
  public:
    PassError(PassErrKind kind, const std::string& msg)
        : std::runtime_error(std::string(passErrKindName(kind)) + ": " + msg), kind(kind) {}
    PassErrKind kind;
};

struct PassResult {
    Program program;
    PassReport report;
};

// New active version copied from the old one; every assume retargets to the
// old version at its own label with the identity varmap.
PassResult createVersion(const Program& p, const FunName& f, const VersionName& newLabel);
// `assume true else F.Vprev.atLabel [identity]`; the assume takes over
// atLabel, the displaced instruction gets a fresh label.
PassResult insertAssume(const Program& p, const FunName& f, const VersionName& v,
                        const Label& atLabel);
// Append a predicate to an existing assume.
PassResult injectPredicate(const Program& p, const FunName& f, const VersionName& v,
                           const Label& assumeLabel, const Expr& pred);

PassResult constantPropagate(const Program& p, const FunName& f, const VersionName& v);
PassResult foldBranches(const Program& p, const FunName& f, const VersionName& v);
PassResult removeUnreachable(const Program& p, const FunName& f, const VersionName& v);
PassResult removeDeadVars(const Program& p, const FunName& f, const VersionName& v);
PassResult inlineCall(const Program& p, const FunName& caller, const VersionName& v,
                      const Label& callLabel);
PassResult moveAssume(const Program& p, const FunName& f, const VersionName& v,
                      const Label& assumeLabel);
PassResult snapshotVar(const Program& p, const FunName& f, const VersionName& v,
                       const Label& assumeLabel, const VarName& x);
PassResult hoistPredicate(const Program& p, const FunName& f, const VersionName& v,
                          const Label& fromLabel, const Label& toLabel, size_t predIndex);
PassResult removeTrivialAssume(const Program& p, const FunName& f, const VersionName& v,
                               const Label& assumeLabel);
PassResult composeAssume(const Program& p, const FunName& f, const VersionName& v1,
                         const Label& l1);

struct PassInvocation {
    std::string name;
    std::map<std::string, std::string> args;
};

// One invocation per line: `pass-name arg=value ...`; values with spaces are
// double-quoted. `#` comments.
std::vector<PassInvocation> parsePipeline(const std::string& text);
std::string printInvocation(const PassInvocation& inv);

PassResult applyInvocation(const Program& p, const PassInvocation& inv);
// Sequential application; every intermediate program must pass checkProgram,
// otherwise PassError{PipelineAborted}.
std::pair<Program, std::vector<PassReport>> runPipeline(const Program& p,
                                                        const std::vector<PassInvocation>& spec);

// Identity varmap [x = x, ...] over a scope, alphabetical.
Varmap identityVarmap(const std::set<VarName>& scope);

// Equality up to a positional renaming of this version's labels; deopt
// targets and frame references are compared verbatim.
bool structurallyEqual(const Version& a, const Version& b);

std::string printReport(const PassReport& r);

} // namespace sourir

#endif
