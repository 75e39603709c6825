#ifndef SOURIR_WELLFORMED_H
#define SOURIR_WELLFORMED_H

#include "sourir/ir.h"

#include <map>
#include <string>
#include <vector>

namespace sourir {

enum class DiagCode {
    MainMissingStop,
    DuplicateDecl,
    UnknownFunction,
    ScopeMismatch,
    UnboundVariable,
    BadDeoptTarget,
    VarmapScopeMismatch,
    FallThroughEnd,
    UnknownLabel,
};

const char* diagCodeName(DiagCode code);

struct Diagnostic {
    FunName fun;
    VersionName version;
    Label label;
    DiagCode code;
    std::string message;

    // Rendered as F.V.L: CODE: message (the CLI prefixes the file name).
    std::string render() const;
};

// Variables in scope on entry to each label of one version.
using ScopeMap = std::map<Label, std::set<VarName>>;

// Forward dataflow from the entry label, seeded with the parameters.
// Throws IrError("ScopeMismatch") if two incoming edges disagree.
ScopeMap scopeAt(const Program& p, const FunName& f, const VersionName& v);

// All static checks; empty result means the program is well-formed.
std::vector<Diagnostic> checkProgram(const Program& p);

std::string renderDiagnostics(const std::vector<Diagnostic>& diags,
                              const std::string& filename = "");

} // namespace sourir

#endif
