#include "sourir/wellformed.h"

#include "sourir/text.h"

#include <algorithm>
#include <deque>
#include <sstream>

namespace sourir {

const char* diagCodeName(DiagCode code) {
    switch (code) {
    case DiagCode::MainMissingStop:
        return "MainMissingStop";
    case DiagCode::DuplicateDecl:
        return "DuplicateDecl";
    case DiagCode::UnknownFunction:
        return "UnknownFunction";
    case DiagCode::ScopeMismatch:
        return "ScopeMismatch";
    case DiagCode::UnboundVariable:
        return "UnboundVariable";
    case DiagCode::BadDeoptTarget:
        return "BadDeoptTarget";
    case DiagCode::VarmapScopeMismatch:
        return "VarmapScopeMismatch";
    case DiagCode::FallThroughEnd:
        return "FallThroughEnd";
    case DiagCode::UnknownLabel:
        return "UnknownLabel";
    }
    return "?";
}

std::string Diagnostic::render() const {
    std::string loc = fun;
    if (!version.empty())
        loc += "." + version;
    if (!label.empty())
        loc += "." + label;
    return loc + ": " + diagCodeName(code) + ": " + message;
}

std::string renderDiagnostics(const std::vector<Diagnostic>& diags, const std::string& filename) {
    std::string out;
    for (auto& d : diags) {
        if (!filename.empty())
            out += filename + ":";
        out += d.render() + "\n";
    }
    return out;
}

namespace {

std::string setToString(const std::set<VarName>& s) {
    std::string out = "{";
    bool first = true;
    for (auto& x : s) {
        if (!first)
            out += ", ";
        out += x;
        first = false;
    }
    return out + "}";
}

struct Checker {
    const Program& p;
    std::vector<Diagnostic> diags;
    // scopes[f][v] present only when the scope analysis succeeded for that version
    std::map<FunName, std::map<VersionName, ScopeMap>> scopes;

    explicit Checker(const Program& p) : p(p) {}

    void report(const FunName& f, const VersionName& v, const Label& l, DiagCode code,
                const std::string& msg) {
        diags.push_back({f, v, l, code, msg});
    }

    // Forward dataflow; returns nullopt and reports when edges disagree or a
    // jump target is missing. Deterministic: worklist in position order.
    std::optional<ScopeMap> computeScopes(const Function& f, const Version& v, bool collect) {
        const InstructionStream& s = v.instrs;
        if (s.empty())
            return ScopeMap{};
        std::map<Label, size_t> index;
        for (size_t i = 0; i < s.size(); ++i)
            index.emplace(s[i].label, i);
        std::vector<std::optional<std::set<VarName>>> in(s.size());
        in[0] = std::set<VarName>(f.params.begin(), f.params.end());
        std::deque<size_t> work{0};
        bool ok = true;
        while (!work.empty()) {
            size_t at = work.front();
            work.pop_front();
            std::set<VarName> scope = *in[at];
            const Instr& i = s[at].instr;
            if (auto d = declaredVar(i))
                scope.insert(*d);
            if (i.kind == Instr::Kind::Drop)
                scope.erase(i.var);
            auto edge = [&](const Label& target) {
                auto it = index.find(target);
                if (it == index.end())
                    return; // reported separately as UnknownLabel
                size_t ti = it->second;
                if (!in[ti]) {
                    in[ti] = scope;
                    work.push_back(ti);
                } else if (*in[ti] != scope) {
                    ok = false;
                    if (collect)
                        report(f.name, v.name, s[ti].label, DiagCode::ScopeMismatch,
                               "incoming scopes disagree: " + setToString(*in[ti]) + " vs " +
                                   setToString(scope) + " (from " + s[at].label + ")");
                }
            };
            switch (i.kind) {
            case Instr::Kind::Goto:
                edge(i.l1);
                break;
            case Instr::Kind::Branch:
                edge(i.l1);
                edge(i.l2);
                break;
            case Instr::Kind::Return:
            case Instr::Kind::Stop:
                break;
            default:
                if (at + 1 < s.size())
                    edge(s[at + 1].label);
                break;
            }
        }
        if (!ok)
            return std::nullopt;
        ScopeMap out;
        for (size_t i = 0; i < s.size(); ++i)
            if (in[i])
                out[s[i].label] = *in[i];
            else
                out[s[i].label] = {}; // unreachable instruction: empty scope
        return out;
    }

    void checkStructure() {
        std::set<FunName> names;
        for (auto& f : p.functions) {
            if (!names.insert(f.name).second)
                report(f.name, "", "", DiagCode::DuplicateDecl,
                       "duplicate function name '" + f.name + "'");
            std::set<VersionName> vnames;
            for (auto& v : f.versions) {
                if (!vnames.insert(v.name).second)
                    report(f.name, v.name, "", DiagCode::DuplicateDecl,
                           "duplicate version label '" + v.name + "'");
                std::set<Label> labels;
                for (auto& e : v.instrs)
                    if (!labels.insert(e.label).second)
                        report(f.name, v.name, e.label, DiagCode::DuplicateDecl,
                               "duplicate label '" + e.label + "'");
            }
        }
        const Function* main = p.function("main");
        if (!main)
            report("main", "", "", DiagCode::UnknownFunction, "no function named 'main'");
        else if (!main->params.empty())
            report("main", "", "", DiagCode::UnknownFunction, "'main' must take no parameters");
    }

    void checkVersion(const Function& f, const Version& v) {
        const InstructionStream& s = v.instrs;
        // (a) main ends with stop; (h) nothing falls off the end
        if (s.empty()) {
            report(f.name, v.name, "", DiagCode::FallThroughEnd, "empty instruction stream");
            return;
        }
        const Instr& last = s.back().instr;
        if (f.name == "main" && last.kind != Instr::Kind::Stop)
            report(f.name, v.name, s.back().label, DiagCode::MainMissingStop,
                   "the last instruction of a main version must be stop");
        if (fallsThrough(last.kind))
            report(f.name, v.name, s.back().label, DiagCode::FallThroughEnd,
                   "the last instruction falls through the end of the stream");

        // (b) one declaration per name per stream (parameters included)
        std::set<VarName> declared(f.params.begin(), f.params.end());
        for (auto& e : s)
            if (auto d = declaredVar(e.instr))
                if (!declared.insert(*d).second)
                    report(f.name, v.name, e.label, DiagCode::DuplicateDecl,
                           "second declaration of '" + *d + "' in the same stream");

        // goto/branch targets exist
        std::set<Label> labels = labelsOf(s);
        for (auto& e : s) {
            const Instr& i = e.instr;
            if (i.kind == Instr::Kind::Goto || i.kind == Instr::Kind::Branch) {
                if (!labels.count(i.l1))
                    report(f.name, v.name, e.label, DiagCode::UnknownLabel,
                           "jump target '" + i.l1 + "' does not exist");
                if (i.kind == Instr::Kind::Branch && !labels.count(i.l2))
                    report(f.name, v.name, e.label, DiagCode::UnknownLabel,
                           "jump target '" + i.l2 + "' does not exist");
            }
        }

        // (d) + (e): scope consistency and var uses
        auto scopeMap = computeScopes(f, v, /*collect=*/true);
        if (!scopeMap)
            return; // already reported; use checks below would be noise
        scopes[f.name][v.name] = *scopeMap;

        for (auto& e : s) {
            const std::set<VarName>& scope = (*scopeMap)[e.label];
            auto use = [&](const VarName& x) {
                if (!scope.count(x))
                    report(f.name, v.name, e.label, DiagCode::UnboundVariable,
                           "variable '" + x + "' is not in scope");
            };
            auto useExpr = [&](const Expr& ex) {
                for (auto& x : freeVarsOf(ex))
                    use(x);
            };
            const Instr& i = e.instr;
            switch (i.kind) {
            case Instr::Kind::VarDecl:
            case Instr::Kind::ArrayAlloc:
                useExpr(i.expr);
                break;
            case Instr::Kind::ArrayLit:
                for (auto& a : i.args)
                    useExpr(a);
                break;
            case Instr::Kind::Drop:
            case Instr::Kind::Read:
                use(i.var);
                break;
            case Instr::Kind::Assign:
                use(i.var);
                useExpr(i.expr);
                break;
            case Instr::Kind::ArrayStore:
                use(i.var);
                useExpr(i.index);
                useExpr(i.expr);
                break;
            case Instr::Kind::Branch:
            case Instr::Kind::Print:
            case Instr::Kind::Return:
                useExpr(i.expr);
                break;
            case Instr::Kind::Call:
                useExpr(i.callee);
                for (auto& a : i.args)
                    useExpr(a);
                break;
            case Instr::Kind::Assume: {
                for (auto& pr : i.predicates)
                    useExpr(pr);
                for (auto& b : i.target.varmap)
                    useExpr(b.expr);
                for (auto& fr : i.frames)
                    for (auto& b : fr.varmap)
                        useExpr(b.expr);
                break;
            }
            default:
                break;
            }
        }
    }

    // (c) function references resolve
    void checkFunRefs(const Function& f, const Version& v) {
        auto checkExpr = [&](const Label& l, const Expr& e) {
            for (auto& se : e.operands)
                if (se.kind == SimpleExpr::Kind::FunRef && !p.function(se.name))
                    report(f.name, v.name, l, DiagCode::UnknownFunction,
                           "reference to unknown function '" + se.name + "'");
        };
        for (auto& e : v.instrs) {
            const Instr& i = e.instr;
            checkExpr(e.label, i.expr);
            checkExpr(e.label, i.index);
            checkExpr(e.label, i.callee);
            for (auto& a : i.args)
                checkExpr(e.label, a);
            for (auto& pr : i.predicates)
                checkExpr(e.label, pr);
            for (auto& b : i.target.varmap)
                checkExpr(e.label, b.expr);
            for (auto& fr : i.frames)
                for (auto& b : fr.varmap)
                    checkExpr(e.label, b.expr);
        }
    }

    // (f) + (g): deoptimization metadata
    void checkDeoptMetadata(const Function& f, const Version& v) {
        for (auto& e : v.instrs) {
            const Instr& i = e.instr;
            if (i.kind != Instr::Kind::Assume)
                continue;
            checkVarmapNames(f, v, e.label, i.target.varmap);
            checkTargetScope(f, v, e.label, i.target.fun, i.target.version, i.target.label,
                             i.target.varmap, nullptr);
            for (auto& fr : i.frames) {
                checkVarmapNames(f, v, e.label, fr.varmap);
                checkTargetScope(f, v, e.label, fr.fun, fr.version, fr.label, fr.varmap,
                                 &fr.retVar);
            }
        }
    }

    void checkVarmapNames(const Function& f, const Version& v, const Label& l, const Varmap& vm) {
        std::set<VarName> names;
        for (auto& b : vm)
            if (!names.insert(b.name).second)
                report(f.name, v.name, l, DiagCode::DuplicateDecl,
                       "varmap binds '" + b.name + "' twice");
    }

    void checkTargetScope(const Function& f, const Version& v, const Label& l,
                          const FunName& tf, const VersionName& tv, const Label& tl,
                          const Varmap& vm, const VarName* retVar) {
        const Function* fun = p.function(tf);
        const Version* ver = fun ? fun->version(tv) : nullptr;
        bool labelOk = ver && labelsOf(ver->instrs).count(tl);
        if (!labelOk) {
            report(f.name, v.name, l, DiagCode::BadDeoptTarget,
                   "target " + tf + "." + tv + "." + tl + " does not exist");
            return;
        }
        auto fit = scopes.find(tf);
        if (fit == scopes.end() || !fit->second.count(tv))
            return; // target version itself ill-formed; reported there
        const ScopeMap& sm = fit->second.at(tv);
        std::set<VarName> expected = sm.at(tl);
        if (retVar) {
            if (!expected.count(*retVar)) {
                report(f.name, v.name, l, DiagCode::VarmapScopeMismatch,
                       "return variable '" + *retVar + "' is not in scope at " + tf + "." + tv +
                           "." + tl);
                return;
            }
            expected.erase(*retVar);
            for (auto& b : vm)
                if (b.name == *retVar)
                    report(f.name, v.name, l, DiagCode::VarmapScopeMismatch,
                           "frame varmap must not bind the return variable '" + *retVar + "'");
        }
        std::set<VarName> got;
        for (auto& b : vm)
            got.insert(b.name);
        if (got != expected)
            report(f.name, v.name, l, DiagCode::VarmapScopeMismatch,
                   "varmap binds " + setToString(got) + " but the scope at " + tf + "." + tv +
                       "." + tl + " is " + setToString(expected));
    }

    std::vector<Diagnostic> run() {
        checkStructure();
        if (!diags.empty())
            return diags; // broken top-level structure makes the rest unreliable
        for (auto& f : p.functions)
            for (auto& v : f.versions) {
                checkVersion(f, v);
                checkFunRefs(f, v);
            }
        // metadata checks need scopes of all versions, run them last
        for (auto& f : p.functions)
            for (auto& v : f.versions)
                checkDeoptMetadata(f, v);
        return diags;
    }
};

} // namespace

ScopeMap scopeAt(const Program& p, const FunName& f, const VersionName& v) {
    const Function* fun = p.function(f);
    if (!fun)
        throw IrError("UnknownFunction", "no function named '" + f + "'");
    const Version* ver = fun->version(v);
    if (!ver)
        throw IrError("UnknownVersion", "no version '" + v + "' in function '" + f + "'");
    Checker c(p);
    auto sm = c.computeScopes(*fun, *ver, /*collect=*/true);
    if (!sm) {
        std::string detail;
        for (auto& d : c.diags)
            detail += d.render() + "; ";
        throw IrError("ScopeMismatch", detail);
    }
    return *sm;
}

std::vector<Diagnostic> checkProgram(const Program& p) { return Checker(p).run(); }

} // namespace sourir
