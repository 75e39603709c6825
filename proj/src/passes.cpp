#include "sourir/passes.h"

#include "sourir/interp.h"
#include "sourir/text.h"
#include "sourir/wellformed.h"

#include <algorithm>
#include <deque>
#include <sstream>

namespace sourir {

const char* passErrKindName(PassErrKind k) {
    switch (k) {
    case PassErrKind::DuplicateVersionLabel:
        return "DuplicateVersionLabel";
    case PassErrKind::BadDeoptTarget:
        return "BadDeoptTarget";
    case PassErrKind::NotAnAssume:
        return "NotAnAssume";
    case PassErrKind::UnboundVariable:
        return "UnboundVariable";
    case PassErrKind::NotADirectCall:
        return "NotADirectCall";
    case PassErrKind::NotACall:
        return "NotACall";
    case PassErrKind::MoveConditionViolated:
        return "MoveConditionViolated";
    case PassErrKind::OutOfScope:
        return "OutOfScope";
    case PassErrKind::PredIndexOutOfRange:
        return "PredIndexOutOfRange";
    case PassErrKind::NotTrivial:
        return "NotTrivial";
    case PassErrKind::TargetNotAssume:
        return "TargetNotAssume";
    case PassErrKind::WouldNestExpression:
        return "WouldNestExpression";
    case PassErrKind::UnknownFunction:
        return "UnknownFunction";
    case PassErrKind::UnknownVersion:
        return "UnknownVersion";
    case PassErrKind::UnknownLabel:
        return "UnknownLabel";
    case PassErrKind::IllFormed:
        return "IllFormed";
    case PassErrKind::PipelineAborted:
        return "PipelineAborted";
    }
    return "?";
}

namespace {

Function& findFunction(Program& p, const FunName& f) {
    Function* fun = p.function(f);
    if (!fun)
        throw PassError(PassErrKind::UnknownFunction, "no function '" + f + "'");
    return *fun;
}

Version& findVersion(Function& f, const VersionName& v) {
    Version* ver = f.version(v);
    if (!ver)
        throw PassError(PassErrKind::UnknownVersion, "no version '" + f.name + "." + v + "'");
    return *ver;
}

size_t findLabel(const Version& v, const Label& l, PassErrKind err = PassErrKind::UnknownLabel) {
    for (size_t i = 0; i < v.instrs.size(); ++i)
        if (v.instrs[i].label == l)
            return i;
    throw PassError(err, "no label '" + l + "' in version '" + v.name + "'");
}

// Visit every rewritable expression slot of an instruction.
template <typename F>
void forEachExpr(Instr& i, F fn) {
    switch (i.kind) {
    case Instr::Kind::VarDecl:
    case Instr::Kind::Assign:
    case Instr::Kind::ArrayAlloc:
    case Instr::Kind::Branch:
    case Instr::Kind::Print:
    case Instr::Kind::Return:
        fn(i.expr);
        break;
    case Instr::Kind::ArrayStore:
        fn(i.index);
        fn(i.expr);
        break;
    case Instr::Kind::ArrayLit:
        for (auto& a : i.args)
            fn(a);
        break;
    case Instr::Kind::Call:
        fn(i.callee);
        for (auto& a : i.args)
            fn(a);
        break;
    case Instr::Kind::Assume:
        for (auto& pr : i.predicates)
            fn(pr);
        for (auto& b : i.target.varmap)
            fn(b.expr);
        for (auto& fr : i.frames)
            for (auto& b : fr.varmap)
                fn(b.expr);
        break;
    default:
        break;
    }
}

} // namespace

Varmap identityVarmap(const std::set<VarName>& scope) {
    Varmap vm;
    for (auto& x : scope)
        vm.push_back({x, Expr::var(x)});
    return vm;
}

std::string printReport(const PassReport& r) {
    std::string out = r.pass + ": changed=" + (r.changed ? "true" : "false") +
                      " rewrites=" + std::to_string(r.rewrites);
    if (!r.notes.empty())
        out += " (" + r.notes + ")";
    return out;
}

// ---------------------------------------------------------------------------
// Version creation and predicate injection

PassResult createVersion(const Program& p, const FunName& f, const VersionName& newLabel) {
    Program out = p;
    Function& fun = findFunction(out, f);
    if (fun.version(newLabel))
        throw PassError(PassErrKind::DuplicateVersionLabel,
                        "'" + f + "' already has a version '" + newLabel + "'");
    const VersionName oldName = fun.versions.front().name;
    ScopeMap scopes = scopeAt(p, f, oldName);
    Version fresh;
    fresh.name = newLabel;
    fresh.instrs = fun.versions.front().instrs;
    for (auto& e : fresh.instrs) {
        if (e.instr.kind != Instr::Kind::Assume)
            continue;
        // retarget to the copied version at this very label with the identity
        // varmap; predicates stay, old frames are dropped with the old target
        e.instr.target.fun = f;
        e.instr.target.version = oldName;
        e.instr.target.label = e.label;
        e.instr.target.varmap = identityVarmap(scopes.at(e.label));
        e.instr.frames.clear();
    }
    fun.versions.insert(fun.versions.begin(), std::move(fresh));
    PassReport report{"create-version", true, 1,
                      f + ": new active version " + newLabel + " from " + oldName};
    return {std::move(out), std::move(report)};
}

PassResult insertAssume(const Program& p, const FunName& f, const VersionName& v,
                        const Label& atLabel) {
    Program out = p;
    Function& fun = findFunction(out, f);
    Version& ver = findVersion(fun, v);
    size_t vIndex = 0;
    while (fun.versions[vIndex].name != v)
        ++vIndex;
    if (vIndex + 1 >= fun.versions.size())
        throw PassError(PassErrKind::BadDeoptTarget,
                        "version '" + v + "' has no previous version to target");
    const Version& prev = fun.versions[vIndex + 1];
    if (!labelsOf(prev.instrs).count(atLabel))
        throw PassError(PassErrKind::BadDeoptTarget,
                        "label '" + atLabel + "' is absent from version '" + prev.name + "'");
    size_t at = findLabel(ver, atLabel);
    ScopeMap scopes = scopeAt(out, f, v);
    DeoptTarget target{f, prev.name, atLabel, identityVarmap(scopes.at(atLabel))};
    Instr assume = Instr::assume({Expr::literal(Lit::boolean(true))}, std::move(target), {});
    // the assume takes over the label so every incoming edge passes the guard
    Label displaced = freshName(atLabel, labelsOf(ver.instrs));
    ver.instrs[at].label = displaced;
    ver.instrs.insert(ver.instrs.begin() + at, {atLabel, std::move(assume)});
    PassReport report{"insert-assume", true, 1, f + "." + v + " at " + atLabel};
    return {std::move(out), std::move(report)};
}

PassResult injectPredicate(const Program& p, const FunName& f, const VersionName& v,
                           const Label& assumeLabel, const Expr& pred) {
    Program out = p;
    Function& fun = findFunction(out, f);
    Version& ver = findVersion(fun, v);
    size_t at = findLabel(ver, assumeLabel);
    Instr& i = ver.instrs[at].instr;
    if (i.kind != Instr::Kind::Assume)
        throw PassError(PassErrKind::NotAnAssume,
                        "instruction at '" + assumeLabel + "' is not an assume");
    ScopeMap scopes = scopeAt(out, f, v);
    const std::set<VarName>& scope = scopes.at(assumeLabel);
    for (auto& x : freeVarsOf(pred))
        if (!scope.count(x))
            throw PassError(PassErrKind::UnboundVariable,
                            "'" + x + "' is not in scope at " + f + "." + v + "." + assumeLabel);
    i.predicates.push_back(pred);
    PassReport report{"inject-predicate", true, 1, print(pred) + " at " + assumeLabel};
    return {std::move(out), std::move(report)};
}

// ---------------------------------------------------------------------------
// Constant propagation

AbstractEnv joinAbstract(const AbstractEnv& a, const AbstractEnv& b) {
    AbstractEnv out;
    for (auto& [x, fact] : a) {
        auto it = b.find(x);
        if (it != b.end() && it->second == fact)
            out.emplace(x, fact);
    }
    return out;
}

namespace {

std::optional<Lit> foldSimple(const AbstractEnv& env, const SimpleExpr& se) {
    if (se.kind == SimpleExpr::Kind::Lit)
        return se.lit;
    if (se.kind == SimpleExpr::Kind::Var) {
        auto it = env.find(se.name);
        if (it != env.end() && it->second.kind == AbstractValue::Kind::Const)
            return it->second.lit;
    }
    return std::nullopt;
}

std::optional<Lit> notConstFactOf(const AbstractEnv& env, const SimpleExpr& se) {
    if (se.kind != SimpleExpr::Kind::Var)
        return std::nullopt;
    auto it = env.find(se.name);
    if (it != env.end() && it->second.kind == AbstractValue::Kind::NotConst)
        return it->second.lit;
    return std::nullopt;
}

} // namespace

std::optional<Lit> foldExpr(const AbstractEnv& env, const Expr& e) {
    if (e.kind == Expr::Kind::Simple)
        return foldSimple(env, e.operands[0]);
    if (e.kind != Expr::Kind::Primop)
        return std::nullopt; // heap reads never fold
    if (e.op == Primop::Eq || e.op == Primop::Ne) {
        const SimpleExpr& a = e.operands[0];
        const SimpleExpr& b = e.operands[1];
        bool eq = e.op == Primop::Eq;
        // x == x is true for every value, including addresses
        if (a.kind == SimpleExpr::Kind::Var && b.kind == SimpleExpr::Kind::Var && a.name == b.name)
            return Lit::boolean(eq);
        auto la = foldSimple(env, a);
        auto lb = foldSimple(env, b);
        if (la && lb)
            return Lit::boolean(eq == (*la == *lb));
        // the "x is not lit" fact settles comparisons against that literal
        if (la)
            if (auto nc = notConstFactOf(env, b); nc && *nc == *la)
                return Lit::boolean(!eq);
        if (lb)
            if (auto nc = notConstFactOf(env, a); nc && *nc == *lb)
                return Lit::boolean(!eq);
        return std::nullopt;
    }
    // remaining primops: fold only when concrete evaluation succeeds, so a
    // latent runtime error is never optimized away
    Expr folded = e;
    for (auto& se : folded.operands) {
        auto l = foldSimple(env, se);
        if (!l)
            return std::nullopt;
        se = SimpleExpr::literal(*l);
    }
    try {
        Heap heap;
        Environment empty;
        Value v = eval(heap, empty, folded);
        if (!v.isLit())
            return std::nullopt;
        return v.toLit();
    } catch (const EvalError&) {
        return std::nullopt;
    }
}

namespace {

void applyAssumeFacts(AbstractEnv& env, const Instr& assume) {
    for (auto& pred : assume.predicates) {
        if (pred.kind != Expr::Kind::Primop || pred.operands.size() != 2)
            continue;
        if (pred.op != Primop::Eq && pred.op != Primop::Ne)
            continue;
        const SimpleExpr* var = nullptr;
        const SimpleExpr* lit = nullptr;
        for (int side = 0; side < 2; ++side) {
            const SimpleExpr& a = pred.operands[side];
            const SimpleExpr& b = pred.operands[1 - side];
            if (a.kind == SimpleExpr::Kind::Var && b.kind == SimpleExpr::Kind::Lit) {
                var = &a;
                lit = &b;
                break;
            }
        }
        if (!var)
            continue;
        if (pred.op == Primop::Eq) {
            env[var->name] = {AbstractValue::Kind::Const, lit->lit};
        } else {
            auto it = env.find(var->name);
            if (it == env.end() || it->second.kind != AbstractValue::Kind::Const)
                env[var->name] = {AbstractValue::Kind::NotConst, lit->lit};
        }
    }
}

void transferAbstract(AbstractEnv& env, const Instr& i) {
    switch (i.kind) {
    case Instr::Kind::VarDecl:
    case Instr::Kind::Assign: {
        auto lit = foldExpr(env, i.expr);
        if (lit)
            env[i.var] = {AbstractValue::Kind::Const, *lit};
        else
            env.erase(i.var);
        break;
    }
    case Instr::Kind::Drop:
    case Instr::Kind::Read:
    case Instr::Kind::Call:
    case Instr::Kind::ArrayAlloc:
    case Instr::Kind::ArrayLit:
        env.erase(i.var); // arrays and runtime inputs are never constant
        break;
    case Instr::Kind::Assume:
        applyAssumeFacts(env, i);
        break;
    default:
        break;
    }
}

std::map<Label, AbstractEnv> factsForVersion(const Version& ver) {
    const InstructionStream& s = ver.instrs;
    std::map<Label, AbstractEnv> result;
    if (s.empty())
        return result;
    std::map<Label, size_t> index;
    for (size_t i = 0; i < s.size(); ++i)
        index.emplace(s[i].label, i);
    std::vector<std::optional<AbstractEnv>> in(s.size());
    in[0] = AbstractEnv{};
    std::deque<size_t> work{0};
    while (!work.empty()) {
        size_t at = work.front();
        work.pop_front();
        AbstractEnv out = *in[at];
        transferAbstract(out, s[at].instr);
        auto edge = [&](const Label& target) {
            auto it = index.find(target);
            if (it == index.end())
                return;
            size_t ti = it->second;
            if (!in[ti]) {
                in[ti] = out;
                work.push_back(ti);
            } else {
                AbstractEnv joined = joinAbstract(*in[ti], out);
                if (joined != *in[ti]) {
                    in[ti] = std::move(joined);
                    work.push_back(ti);
                }
            }
        };
        const Instr& i = s[at].instr;
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
    for (size_t i = 0; i < s.size(); ++i)
        result[s[i].label] = in[i] ? *in[i] : AbstractEnv{};
    return result;
}

// Replace foldable expressions (or single constant operands) by literals.
int rewriteExpr(const AbstractEnv& env, Expr& e) {
    if (auto lit = foldExpr(env, e)) {
        Expr folded = Expr::literal(*lit);
        if (folded == e)
            return 0;
        e = std::move(folded);
        return 1;
    }
    int changed = 0;
    for (auto& se : e.operands) {
        if (se.kind != SimpleExpr::Kind::Var)
            continue;
        auto it = env.find(se.name);
        if (it != env.end() && it->second.kind == AbstractValue::Kind::Const) {
            se = SimpleExpr::literal(it->second.lit);
            ++changed;
        }
    }
    return changed;
}

} // namespace

std::map<Label, AbstractEnv> constantFacts(const Program& p, const FunName& f,
                                           const VersionName& v) {
    const Function* fun = p.function(f);
    if (!fun)
        throw PassError(PassErrKind::UnknownFunction, "no function '" + f + "'");
    const Version* ver = fun->version(v);
    if (!ver)
        throw PassError(PassErrKind::UnknownVersion, "no version '" + f + "." + v + "'");
    return factsForVersion(*ver);
}

PassResult constantPropagate(const Program& p, const FunName& f, const VersionName& v) {
    Program out = p;
    Version& ver = findVersion(findFunction(out, f), v);
    auto facts = factsForVersion(ver);
    int rewrites = 0;
    for (auto& e : ver.instrs) {
        const AbstractEnv& env = facts.at(e.label);
        forEachExpr(e.instr, [&](Expr& ex) { rewrites += rewriteExpr(env, ex); });
        if (e.instr.kind == Instr::Kind::Assume) {
            // a conjunct that folded to `true` can never fire the deopt
            auto& preds = e.instr.predicates;
            size_t before = preds.size();
            preds.erase(std::remove_if(preds.begin(), preds.end(),
                                       [](const Expr& pr) {
                                           return pr.isLiteral() && pr.asLiteral().isTrue();
                                       }),
                        preds.end());
            rewrites += (int)(before - preds.size());
        }
    }
    PassReport report{"constant-propagate", rewrites > 0, rewrites, ""};
    return {std::move(out), std::move(report)};
}

PassResult foldBranches(const Program& p, const FunName& f, const VersionName& v) {
    Program out = p;
    Version& ver = findVersion(findFunction(out, f), v);
    int rewrites = 0;
    for (auto& e : ver.instrs) {
        Instr& i = e.instr;
        if (i.kind != Instr::Kind::Branch || !i.expr.isLiteral())
            continue;
        const Lit& l = i.expr.asLiteral();
        if (l.kind != Lit::Kind::Bool)
            continue;
        i = Instr::gotoL(l.boolval ? i.l1 : i.l2);
        ++rewrites;
    }
    PassReport report{"fold-branches", rewrites > 0, rewrites, ""};
    return {std::move(out), std::move(report)};
}

namespace {

// Rewrite every reference to label `from` in version (f, v) to `to`:
// in-version jumps plus deoptimization metadata anywhere in the program.
void redirectLabel(Program& p, const FunName& f, const VersionName& v, const Label& from,
                   const Label& to) {
    Version& ver = *p.function(f)->version(v);
    for (auto& e : ver.instrs) {
        if (e.instr.kind == Instr::Kind::Goto || e.instr.kind == Instr::Kind::Branch) {
            if (e.instr.l1 == from)
                e.instr.l1 = to;
            if (e.instr.kind == Instr::Kind::Branch && e.instr.l2 == from)
                e.instr.l2 = to;
        }
    }
    for (auto& fun : p.functions)
        for (auto& version : fun.versions)
            for (auto& e : version.instrs) {
                if (e.instr.kind != Instr::Kind::Assume)
                    continue;
                auto& t = e.instr.target;
                if (t.fun == f && t.version == v && t.label == from)
                    t.label = to;
                for (auto& fr : e.instr.frames)
                    if (fr.fun == f && fr.version == v && fr.label == from)
                        fr.label = to;
            }
}

} // namespace

PassResult removeUnreachable(const Program& p, const FunName& f, const VersionName& v) {
    Program out = p;
    Version& ver = findVersion(findFunction(out, f), v);
    int removed = 0;

    if (!ver.instrs.empty()) {
        std::set<Label> reachable;
        std::deque<Label> work{ver.instrs.front().label};
        reachable.insert(ver.instrs.front().label);
        while (!work.empty()) {
            Label at = work.front();
            work.pop_front();
            std::set<Label> succ;
            try {
                succ = successors(ver.instrs, at);
            } catch (const IrError&) {
                continue;
            }
            for (auto& s : succ)
                if (reachable.insert(s).second)
                    work.push_back(s);
        }
        InstructionStream kept;
        for (auto& e : ver.instrs) {
            if (reachable.count(e.label))
                kept.push_back(e);
            else
                ++removed;
        }
        ver.instrs = std::move(kept);
    }

    // a goto to the textually next instruction is a no-op: delete it and let
    // its label alias the target
    bool elided = true;
    while (elided) {
        elided = false;
        Version& current = *out.function(f)->version(v);
        for (size_t i = 0; i + 1 < current.instrs.size(); ++i) {
            const Instr& instr = current.instrs[i].instr;
            if (instr.kind != Instr::Kind::Goto || instr.l1 != current.instrs[i + 1].label)
                continue;
            Label from = current.instrs[i].label;
            Label to = instr.l1;
            current.instrs.erase(current.instrs.begin() + i);
            redirectLabel(out, f, v, from, to);
            ++removed;
            elided = true;
            break;
        }
    }

    PassReport report{"remove-unreachable", removed > 0, removed, ""};
    return {std::move(out), std::move(report)};
}

namespace {

// Deleting a declaration must not delete a latent runtime error with it.
bool deletableRhs(const Expr& e) {
    if (e.kind == Expr::Kind::Simple)
        return true;
    return e.kind == Expr::Kind::Primop && (e.op == Primop::Eq || e.op == Primop::Ne);
}

} // namespace

PassResult removeDeadVars(const Program& p, const FunName& f, const VersionName& v) {
    Program out = p;
    Version& ver = findVersion(findFunction(out, f), v);
    int removed = 0;
    for (;;) {
        std::map<VarName, int> uses;
        for (auto& e : ver.instrs) {
            Instr& i = e.instr;
            forEachExpr(i, [&](Expr& ex) {
                for (auto& x : freeVarsOf(ex))
                    ++uses[x];
            });
            // writes to a variable keep its declaration alive; drops do not
            if (i.kind == Instr::Kind::Assign || i.kind == Instr::Kind::Read ||
                i.kind == Instr::Kind::ArrayStore)
                ++uses[i.var];
        }
        std::optional<VarName> victim;
        for (auto& e : ver.instrs)
            if (e.instr.kind == Instr::Kind::VarDecl && uses[e.instr.var] == 0 &&
                deletableRhs(e.instr.expr)) {
                victim = e.instr.var;
                break;
            }
        if (!victim)
            break;
        // delete the declaration and its drops; each deleted label aliases
        // the entry that follows it, keeping incoming edges valid
        for (size_t i = 0; i < ver.instrs.size();) {
            const Instr& instr = ver.instrs[i].instr;
            bool dead = (instr.kind == Instr::Kind::VarDecl && instr.var == *victim) ||
                        (instr.kind == Instr::Kind::Drop && instr.var == *victim);
            if (!dead) {
                ++i;
                continue;
            }
            if (i + 1 >= ver.instrs.size())
                throw PassError(PassErrKind::IllFormed,
                                "declaration of '" + *victim + "' at the end of the stream");
            Label from = ver.instrs[i].label;
            Label to = ver.instrs[i + 1].label;
            ver.instrs.erase(ver.instrs.begin() + i);
            redirectLabel(out, f, v, from, to);
            ++removed;
        }
    }
    PassReport report{"remove-dead-vars", removed > 0, removed, ""};
    return {std::move(out), std::move(report)};
}

// ---------------------------------------------------------------------------
// Inlining

PassResult inlineCall(const Program& p, const FunName& caller, const VersionName& v,
                      const Label& callLabel) {
    Program out = p;
    Function& fun = findFunction(out, caller);
    Version& ver = findVersion(fun, v);
    size_t at = findLabel(ver, callLabel);
    const Instr call = ver.instrs[at].instr;
    if (call.kind != Instr::Kind::Call)
        throw PassError(PassErrKind::NotACall,
                        "instruction at '" + callLabel + "' is not a call");
    if (call.callee.kind != Expr::Kind::Simple ||
        call.callee.operands[0].kind != SimpleExpr::Kind::FunRef)
        throw PassError(PassErrKind::NotADirectCall, "callee is not a function reference");
    const FunName calleeName = call.callee.operands[0].name;
    const Function* calleeFun = p.function(calleeName);
    if (!calleeFun)
        throw PassError(PassErrKind::UnknownFunction, calleeName);
    if (calleeFun->params.size() != call.args.size())
        throw PassError(PassErrKind::IllFormed, "call arity mismatch");
    if (at + 1 >= ver.instrs.size())
        throw PassError(PassErrKind::IllFormed, "call has no return point");
    const Label retLabel = ver.instrs[at + 1].label;
    const VarName resVar = call.var;

    // the synthesized frame returns into the caller's previous version
    size_t vIndex = 0;
    while (fun.versions[vIndex].name != v)
        ++vIndex;
    if (vIndex + 1 >= fun.versions.size())
        throw PassError(PassErrKind::BadDeoptTarget,
                        "caller has no previous version to deoptimize into");
    const VersionName frameVersion = fun.versions[vIndex + 1].name;
    if (!labelsOf(fun.versions[vIndex + 1].instrs).count(retLabel))
        throw PassError(PassErrKind::BadDeoptTarget, "return label '" + retLabel +
                                                         "' is absent from version '" +
                                                         frameVersion + "'");
    std::set<VarName> frameScope = scopeAt(p, caller, frameVersion).at(retLabel);
    frameScope.erase(resVar);
    const Varmap frameVarmap = identityVarmap(frameScope);

    const Version& inlinee = calleeFun->active();
    ScopeMap inlineeScopes = scopeAt(p, calleeName, inlinee.name);

    // mangle every callee-side name away from the caller's
    std::set<VarName> usedVars = varNamesOf(ver.instrs, fun.params);
    std::vector<std::pair<VarName, VarName>> renaming;
    auto renameOf = [&](const VarName& x) -> VarName {
        for (auto& [from, to] : renaming)
            if (from == x)
                return to;
        VarName fresh = freshName(x, usedVars);
        usedVars.insert(fresh);
        renaming.emplace_back(x, fresh);
        return fresh;
    };
    for (auto& param : calleeFun->params)
        renameOf(param);
    for (auto& e : inlinee.instrs)
        if (auto d = declaredVar(e.instr))
            renameOf(*d);

    std::set<Label> usedLabels = labelsOf(ver.instrs);
    std::map<Label, Label> labelMap;
    for (auto& e : inlinee.instrs) {
        Label fresh = freshName(e.label, usedLabels);
        usedLabels.insert(fresh);
        labelMap.emplace(e.label, fresh);
    }
    auto freshLocal = [&](const std::string& base) {
        Label l = freshName(base, usedLabels);
        usedLabels.insert(l);
        return l;
    };

    InstructionStream spliced;
    spliced.push_back({callLabel, Instr::varDecl(resVar, Expr::literal(Lit::nil()))});
    for (size_t k = 0; k < calleeFun->params.size(); ++k)
        spliced.push_back({freshLocal(callLabel + "_arg"),
                           Instr::varDecl(renameOf(calleeFun->params[k]), call.args[k])});

    // declaration order, for dropping in reverse at each return
    std::vector<VarName> declOrder = calleeFun->params;
    for (auto& e : inlinee.instrs)
        if (auto d = declaredVar(e.instr))
            declOrder.push_back(*d);

    for (auto& e : inlinee.instrs) {
        Instr i = e.instr;
        Label l = labelMap.at(e.label);
        // variable renaming: targets and every expression slot
        if (!i.var.empty())
            i.var = renameOf(i.var);
        forEachExpr(i, [&](Expr& ex) { ex = renameVars(ex, renaming); });
        if (i.kind == Instr::Kind::Goto) {
            i.l1 = labelMap.at(i.l1);
        } else if (i.kind == Instr::Kind::Branch) {
            i.l1 = labelMap.at(i.l1);
            i.l2 = labelMap.at(i.l2);
        }
        if (i.kind == Instr::Kind::Return) {
            spliced.push_back({l, Instr::assign(resVar, i.expr)});
            const std::set<VarName>& scope = inlineeScopes.at(e.label);
            for (auto it = declOrder.rbegin(); it != declOrder.rend(); ++it)
                if (scope.count(*it))
                    spliced.push_back({freshLocal(l + "_drop"), Instr::drop(renameOf(*it))});
            spliced.push_back({freshLocal(l + "_ret"), Instr::gotoL(retLabel)});
            continue;
        }
        if (i.kind == Instr::Kind::Assume)
            i.frames.push_back({caller, frameVersion, retLabel, resVar, frameVarmap});
        spliced.push_back({l, std::move(i)});
    }

    InstructionStream result;
    result.reserve(ver.instrs.size() + spliced.size());
    for (size_t k = 0; k < ver.instrs.size(); ++k) {
        if (k == at) {
            for (auto& s : spliced)
                result.push_back(std::move(s));
        } else {
            result.push_back(ver.instrs[k]);
        }
    }
    ver.instrs = std::move(result);
    PassReport report{"inline", true, (int)spliced.size(),
                      calleeName + "." + inlinee.name + " into " + caller + "." + v + " at " +
                          callLabel};
    return {std::move(out), std::move(report)};
}

// ---------------------------------------------------------------------------
// Assume motion

PassResult moveAssume(const Program& p, const FunName& f, const VersionName& v,
                      const Label& assumeLabel) {
    Program out = p;
    Version& ver = findVersion(findFunction(out, f), v);
    size_t at = findLabel(ver, assumeLabel);
    if (ver.instrs[at].instr.kind != Instr::Kind::Assume)
        throw PassError(PassErrKind::NotAnAssume,
                        "instruction at '" + assumeLabel + "' is not an assume");
    if (at + 1 >= ver.instrs.size())
        throw PassError(PassErrKind::MoveConditionViolated,
                        "condition 1: no instruction after the assume");
    const Instr& im = ver.instrs[at + 1].instr;
    switch (im.kind) {
    case Instr::Kind::VarDecl:
    case Instr::Kind::Assign:
    case Instr::Kind::Drop:
    case Instr::Kind::Goto:
        break;
    default:
        throw PassError(PassErrKind::MoveConditionViolated,
                        "condition 1: cannot move over a " + print(im));
    }
    std::set<VarName> mentioned = assumeMentionedVars(ver.instrs[at].instr);
    std::optional<VarName> touched = declaredVar(im);
    if (!touched)
        touched = assignedVar(im);
    if (im.kind == Instr::Kind::Drop)
        touched = im.var;
    if (touched && mentioned.count(*touched))
        throw PassError(PassErrKind::MoveConditionViolated,
                        "condition 2: '" + *touched + "' is mentioned by the assume");
    std::set<Label> preds = predecessors(ver.instrs, ver.instrs[at + 1].label);
    if (preds != std::set<Label>{assumeLabel})
        throw PassError(PassErrKind::MoveConditionViolated,
                        "condition 3: the assume is not the only predecessor");
    // labels stay with their positions, instructions swap; every edge into the
    // assume's old label now runs the moved-over instruction first
    std::swap(ver.instrs[at].instr, ver.instrs[at + 1].instr);
    PassReport report{"move-assume", true, 1, assumeLabel + " past " + print(im)};
    return {std::move(out), std::move(report)};
}

PassResult snapshotVar(const Program& p, const FunName& f, const VersionName& v,
                       const Label& assumeLabel, const VarName& x) {
    Program out = p;
    Function& fun = findFunction(out, f);
    Version& ver = findVersion(fun, v);
    size_t at = findLabel(ver, assumeLabel);
    Instr& assume = ver.instrs[at].instr;
    if (assume.kind != Instr::Kind::Assume)
        throw PassError(PassErrKind::NotAnAssume,
                        "instruction at '" + assumeLabel + "' is not an assume");
    ScopeMap scopes = scopeAt(out, f, v);
    if (!scopes.at(assumeLabel).count(x))
        throw PassError(PassErrKind::UnboundVariable,
                        "'" + x + "' is not in scope at " + assumeLabel);
    VarName snapshot = freshName(x + "0", varNamesOf(ver.instrs, fun.params));
    std::vector<std::pair<VarName, VarName>> renaming{{x, snapshot}};
    // the varmaps now read the snapshot; predicates keep testing current state
    for (auto& b : assume.target.varmap)
        b.expr = renameVars(b.expr, renaming);
    for (auto& fr : assume.frames)
        for (auto& b : fr.varmap)
            b.expr = renameVars(b.expr, renaming);
    Label displaced = freshName(assumeLabel, labelsOf(ver.instrs));
    ver.instrs[at].label = displaced;
    ver.instrs.insert(ver.instrs.begin() + at,
                      {assumeLabel, Instr::varDecl(snapshot, Expr::var(x))});
    PassReport report{"snapshot-var", true, 1, "var " + snapshot + " = " + x};
    return {std::move(out), std::move(report)};
}

// ---------------------------------------------------------------------------
// Predicate hoisting

namespace {

bool readsHeap(const Expr& e) {
    return e.kind == Expr::Kind::ArrayRead || e.kind == Expr::Kind::Length;
}

struct AvailState {
    AbstractEnv facts;
    std::vector<Expr> available; // asserted predicates not yet invalidated
    bool operator==(const AvailState&) const = default;
};

void killMentions(AvailState& st, const VarName& x) {
    st.available.erase(std::remove_if(st.available.begin(), st.available.end(),
                                      [&](const Expr& e) { return freeVarsOf(e).count(x); }),
                       st.available.end());
}

void transferAvail(AvailState& st, const Instr& i) {
    if (auto d = declaredVar(i))
        killMentions(st, *d);
    if (auto a = assignedVar(i))
        killMentions(st, *a);
    if (i.kind == Instr::Kind::Drop)
        killMentions(st, i.var);
    if (i.kind == Instr::Kind::ArrayStore || i.kind == Instr::Kind::Call)
        st.available.erase(std::remove_if(st.available.begin(), st.available.end(), readsHeap),
                           st.available.end());
    transferAbstract(st.facts, i);
    if (i.kind == Instr::Kind::Assume)
        for (auto& pred : i.predicates)
            if (std::find(st.available.begin(), st.available.end(), pred) == st.available.end())
                st.available.push_back(pred);
}

AvailState joinAvail(const AvailState& a, const AvailState& b) {
    AvailState out;
    out.facts = joinAbstract(a.facts, b.facts);
    for (auto& e : a.available)
        if (std::find(b.available.begin(), b.available.end(), e) != b.available.end())
            out.available.push_back(e);
    return out;
}

std::map<Label, AvailState> availability(const Version& ver) {
    const InstructionStream& s = ver.instrs;
    std::map<Label, AvailState> result;
    if (s.empty())
        return result;
    std::map<Label, size_t> index;
    for (size_t i = 0; i < s.size(); ++i)
        index.emplace(s[i].label, i);
    std::vector<std::optional<AvailState>> in(s.size());
    in[0] = AvailState{};
    std::deque<size_t> work{0};
    while (!work.empty()) {
        size_t at = work.front();
        work.pop_front();
        AvailState out = *in[at];
        transferAvail(out, s[at].instr);
        auto edge = [&](const Label& target) {
            auto it = index.find(target);
            if (it == index.end())
                return;
            size_t ti = it->second;
            if (!in[ti]) {
                in[ti] = out;
                work.push_back(ti);
            } else {
                AvailState joined = joinAvail(*in[ti], out);
                if (!(joined == *in[ti])) {
                    in[ti] = std::move(joined);
                    work.push_back(ti);
                }
            }
        };
        const Instr& i = s[at].instr;
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
    for (size_t i = 0; i < s.size(); ++i)
        result[s[i].label] = in[i] ? *in[i] : AvailState{};
    return result;
}

} // namespace

PassResult hoistPredicate(const Program& p, const FunName& f, const VersionName& v,
                          const Label& fromLabel, const Label& toLabel, size_t predIndex) {
    Program out = p;
    Version& ver = findVersion(findFunction(out, f), v);
    size_t fromAt = findLabel(ver, fromLabel);
    size_t toAt = findLabel(ver, toLabel);
    if (ver.instrs[fromAt].instr.kind != Instr::Kind::Assume)
        throw PassError(PassErrKind::NotAnAssume, "'" + fromLabel + "' is not an assume");
    if (ver.instrs[toAt].instr.kind != Instr::Kind::Assume)
        throw PassError(PassErrKind::NotAnAssume, "'" + toLabel + "' is not an assume");
    Instr& from = ver.instrs[fromAt].instr;
    if (predIndex >= from.predicates.size())
        throw PassError(PassErrKind::PredIndexOutOfRange,
                        "predicate " + std::to_string(predIndex) + " of " +
                            std::to_string(from.predicates.size()));
    const Expr pred = from.predicates[predIndex];
    ScopeMap scopes = scopeAt(out, f, v);
    for (auto& x : freeVarsOf(pred))
        if (!scopes.at(toLabel).count(x))
            throw PassError(PassErrKind::OutOfScope,
                            "'" + x + "' is not in scope at " + toLabel);

    // step 1: copy the predicate to the earlier assume
    ver.instrs[toAt].instr.predicates.push_back(pred);
    // step 2: if the copy makes the original redundant, remove it there;
    // otherwise the whole version stays unchanged
    auto avail = availability(ver);
    const AvailState& st = avail.at(fromLabel);
    bool redundant =
        std::find(st.available.begin(), st.available.end(), pred) != st.available.end();
    if (!redundant)
        if (auto lit = foldExpr(st.facts, pred))
            redundant = lit->isTrue();
    if (!redundant) {
        PassReport report{"hoist-predicate", false, 0, "not available at " + fromLabel};
        return {p, std::move(report)};
    }
    from.predicates.erase(from.predicates.begin() + predIndex);
    PassReport report{"hoist-predicate", true, 1,
                      print(pred) + " from " + fromLabel + " to " + toLabel};
    return {std::move(out), std::move(report)};
}

PassResult removeTrivialAssume(const Program& p, const FunName& f, const VersionName& v,
                               const Label& assumeLabel) {
    Program out = p;
    Version& ver = findVersion(findFunction(out, f), v);
    size_t at = findLabel(ver, assumeLabel);
    const Instr& i = ver.instrs[at].instr;
    if (i.kind != Instr::Kind::Assume)
        throw PassError(PassErrKind::NotAnAssume,
                        "instruction at '" + assumeLabel + "' is not an assume");
    for (auto& pred : i.predicates)
        if (!(pred.isLiteral() && pred.asLiteral().isTrue()))
            throw PassError(PassErrKind::NotTrivial, "predicate " + print(pred) + " remains");
    if (at + 1 >= ver.instrs.size())
        throw PassError(PassErrKind::IllFormed, "assume at the end of the stream");
    Label to = ver.instrs[at + 1].label;
    ver.instrs.erase(ver.instrs.begin() + at);
    redirectLabel(out, f, v, assumeLabel, to);
    PassReport report{"remove-trivial-assume", true, 1, assumeLabel};
    return {std::move(out), std::move(report)};
}

// ---------------------------------------------------------------------------
// Assume composition

PassResult composeAssume(const Program& p, const FunName& f, const VersionName& v1,
                         const Label& l1) {
    Program out = p;
    Version& ver = findVersion(findFunction(out, f), v1);
    size_t at = findLabel(ver, l1);
    Instr& outer = ver.instrs[at].instr;
    if (outer.kind != Instr::Kind::Assume)
        throw PassError(PassErrKind::NotAnAssume, "'" + l1 + "' is not an assume");
    const Function* tf = out.function(outer.target.fun);
    const Version* tv = tf ? tf->version(outer.target.version) : nullptr;
    if (!tv)
        throw PassError(PassErrKind::BadDeoptTarget,
                        outer.target.fun + "." + outer.target.version + " does not exist");
    const Instr* inner = nullptr;
    for (auto& e : tv->instrs)
        if (e.label == outer.target.label) {
            inner = &e.instr;
            break;
        }
    if (!inner)
        throw PassError(PassErrKind::BadDeoptTarget, "target label '" + outer.target.label +
                                                         "' does not exist");
    if (inner->kind != Instr::Kind::Assume)
        throw PassError(PassErrKind::TargetNotAssume,
                        "target instruction is not an assume");

    std::vector<std::pair<VarName, Expr>> mapping;
    for (auto& b : outer.target.varmap)
        mapping.emplace_back(b.name, b.expr);
    auto compose = [&](const Varmap& vm) {
        Varmap composed;
        for (auto& b : vm) {
            auto e = substitute(b.expr, mapping);
            if (!e)
                throw PassError(PassErrKind::WouldNestExpression,
                                "composing '" + print(b.expr) + "' would nest expressions");
            composed.push_back({b.name, *e});
        }
        return composed;
    };

    Instr composed = outer;
    composed.predicates.insert(composed.predicates.end(), inner->predicates.begin(),
                               inner->predicates.end());
    composed.target = inner->target;
    composed.target.varmap = compose(inner->target.varmap);
    // two-step deoptimization stacks the inner assume's frames on top of the
    // outer's, so the composed inner frames come first
    std::vector<ExtraFrame> frames;
    for (auto& fr : inner->frames) {
        ExtraFrame nf = fr;
        nf.varmap = compose(fr.varmap);
        frames.push_back(std::move(nf));
    }
    frames.insert(frames.end(), outer.frames.begin(), outer.frames.end());
    composed.frames = std::move(frames);
    outer = std::move(composed);
    PassReport report{"compose-assume", true, 1,
                      l1 + " now targets " + outer.target.fun + "." + outer.target.version + "." +
                          outer.target.label};
    return {std::move(out), std::move(report)};
}

// ---------------------------------------------------------------------------
// Pipelines

std::vector<PassInvocation> parsePipeline(const std::string& text) {
    std::vector<PassInvocation> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // strip comments outside quotes
        std::string stripped;
        bool inQuote = false;
        for (char c : line) {
            if (c == '"')
                inQuote = !inQuote;
            if (c == '#' && !inQuote)
                break;
            stripped += c;
        }
        std::istringstream ls(stripped);
        std::string word;
        if (!(ls >> word))
            continue;
        PassInvocation inv;
        inv.name = word;
        std::string rest;
        std::getline(ls, rest);
        size_t pos = 0;
        while (pos < rest.size()) {
            while (pos < rest.size() && std::isspace((unsigned char)rest[pos]))
                ++pos;
            if (pos >= rest.size())
                break;
            size_t eq = rest.find('=', pos);
            if (eq == std::string::npos)
                throw ParseError(lineno, (int)pos + 1, "expected key=value");
            std::string key = rest.substr(pos, eq - pos);
            pos = eq + 1;
            std::string value;
            if (pos < rest.size() && rest[pos] == '"') {
                size_t end = rest.find('"', pos + 1);
                if (end == std::string::npos)
                    throw ParseError(lineno, (int)pos + 1, "unterminated quote");
                value = rest.substr(pos + 1, end - pos - 1);
                pos = end + 1;
            } else {
                size_t end = pos;
                while (end < rest.size() && !std::isspace((unsigned char)rest[end]))
                    ++end;
                value = rest.substr(pos, end - pos);
                pos = end;
            }
            inv.args[key] = value;
        }
        out.push_back(std::move(inv));
    }
    return out;
}

std::string printInvocation(const PassInvocation& inv) {
    std::string out = inv.name;
    for (auto& [k, v] : inv.args) {
        out += " " + k + "=";
        if (v.find(' ') != std::string::npos)
            out += "\"" + v + "\"";
        else
            out += v;
    }
    return out;
}

PassResult applyInvocation(const Program& p, const PassInvocation& inv) {
    auto arg = [&](const char* key) -> const std::string& {
        auto it = inv.args.find(key);
        if (it == inv.args.end())
            throw PassError(PassErrKind::IllFormed,
                            inv.name + " needs argument '" + std::string(key) + "'");
        return it->second;
    };
    const std::string& n = inv.name;
    if (n == "create-version")
        return createVersion(p, arg("fn"), arg("new"));
    if (n == "insert-assume")
        return insertAssume(p, arg("fn"), arg("version"), arg("at"));
    if (n == "inject-predicate")
        return injectPredicate(p, arg("fn"), arg("version"), arg("at"),
                               parseExprText(arg("pred")));
    if (n == "constant-propagate")
        return constantPropagate(p, arg("fn"), arg("version"));
    if (n == "fold-branches")
        return foldBranches(p, arg("fn"), arg("version"));
    if (n == "remove-unreachable")
        return removeUnreachable(p, arg("fn"), arg("version"));
    if (n == "remove-dead-vars")
        return removeDeadVars(p, arg("fn"), arg("version"));
    if (n == "inline")
        return inlineCall(p, arg("fn"), arg("version"), arg("at"));
    if (n == "move-assume")
        return moveAssume(p, arg("fn"), arg("version"), arg("at"));
    if (n == "snapshot-var")
        return snapshotVar(p, arg("fn"), arg("version"), arg("at"), arg("var"));
    if (n == "hoist-predicate")
        return hoistPredicate(p, arg("fn"), arg("version"), arg("from"), arg("to"),
                              std::stoul(arg("index")));
    if (n == "remove-trivial-assume")
        return removeTrivialAssume(p, arg("fn"), arg("version"), arg("at"));
    if (n == "compose-assume")
        return composeAssume(p, arg("fn"), arg("version"), arg("at"));
    throw PassError(PassErrKind::IllFormed, "unknown pass '" + n + "'");
}

std::pair<Program, std::vector<PassReport>> runPipeline(const Program& p,
                                                        const std::vector<PassInvocation>& spec) {
    Program current = p;
    std::vector<PassReport> reports;
    for (size_t stage = 0; stage < spec.size(); ++stage) {
        PassResult result = applyInvocation(current, spec[stage]);
        auto diags = checkProgram(result.program);
        if (!diags.empty())
            throw PassError(PassErrKind::PipelineAborted,
                            "stage " + std::to_string(stage) + " (" + spec[stage].name +
                                ") produced an ill-formed program:\n" +
                                renderDiagnostics(diags));
        current = std::move(result.program);
        reports.push_back(std::move(result.report));
    }
    return {std::move(current), std::move(reports)};
}

// ---------------------------------------------------------------------------

bool structurallyEqual(const Version& a, const Version& b) {
    if (a.instrs.size() != b.instrs.size())
        return false;
    auto canonicalize = [](const Version& v) {
        std::map<Label, Label> rename;
        for (size_t i = 0; i < v.instrs.size(); ++i)
            rename[v.instrs[i].label] = "_p" + std::to_string(i);
        InstructionStream out = v.instrs;
        for (size_t i = 0; i < out.size(); ++i) {
            out[i].label = "_p" + std::to_string(i);
            Instr& instr = out[i].instr;
            if (instr.kind == Instr::Kind::Goto || instr.kind == Instr::Kind::Branch) {
                if (rename.count(instr.l1))
                    instr.l1 = rename[instr.l1];
                if (instr.kind == Instr::Kind::Branch && rename.count(instr.l2))
                    instr.l2 = rename[instr.l2];
            }
        }
        return out;
    };
    return canonicalize(a) == canonicalize(b);
}

} // namespace sourir
