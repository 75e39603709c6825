#include "sourir/ir.h"

#include <algorithm>

namespace sourir {

Instr Instr::varDecl(VarName x, Expr e) {
    Instr i;
    i.kind = Kind::VarDecl;
    i.var = std::move(x);
    i.expr = std::move(e);
    return i;
}

Instr Instr::drop(VarName x) {
    Instr i;
    i.kind = Kind::Drop;
    i.var = std::move(x);
    return i;
}

Instr Instr::assign(VarName x, Expr e) {
    Instr i;
    i.kind = Kind::Assign;
    i.var = std::move(x);
    i.expr = std::move(e);
    return i;
}

Instr Instr::arrayAlloc(VarName x, Expr size) {
    Instr i;
    i.kind = Kind::ArrayAlloc;
    i.var = std::move(x);
    i.expr = std::move(size);
    return i;
}

Instr Instr::arrayLit(VarName x, std::vector<Expr> elems) {
    Instr i;
    i.kind = Kind::ArrayLit;
    i.var = std::move(x);
    i.args = std::move(elems);
    return i;
}

Instr Instr::arrayStore(VarName x, Expr index, Expr value) {
    Instr i;
    i.kind = Kind::ArrayStore;
    i.var = std::move(x);
    i.index = std::move(index);
    i.expr = std::move(value);
    return i;
}

Instr Instr::branch(Expr cond, Label l1, Label l2) {
    Instr i;
    i.kind = Kind::Branch;
    i.expr = std::move(cond);
    i.l1 = std::move(l1);
    i.l2 = std::move(l2);
    return i;
}

Instr Instr::gotoL(Label l) {
    Instr i;
    i.kind = Kind::Goto;
    i.l1 = std::move(l);
    return i;
}

Instr Instr::print(Expr e) {
    Instr i;
    i.kind = Kind::Print;
    i.expr = std::move(e);
    return i;
}

Instr Instr::read(VarName x) {
    Instr i;
    i.kind = Kind::Read;
    i.var = std::move(x);
    return i;
}

Instr Instr::call(VarName x, Expr callee, std::vector<Expr> args) {
    Instr i;
    i.kind = Kind::Call;
    i.var = std::move(x);
    i.callee = std::move(callee);
    i.args = std::move(args);
    return i;
}

Instr Instr::ret(Expr e) {
    Instr i;
    i.kind = Kind::Return;
    i.expr = std::move(e);
    return i;
}

Instr Instr::assume(std::vector<Expr> predicates, DeoptTarget target,
                    std::vector<ExtraFrame> frames) {
    Instr i;
    i.kind = Kind::Assume;
    i.predicates = std::move(predicates);
    i.target = std::move(target);
    i.frames = std::move(frames);
    return i;
}

Instr Instr::stop() {
    Instr i;
    i.kind = Kind::Stop;
    return i;
}

const Version* Function::version(const VersionName& v) const {
    for (auto& ver : versions)
        if (ver.name == v)
            return &ver;
    return nullptr;
}

Version* Function::version(const VersionName& v) {
    for (auto& ver : versions)
        if (ver.name == v)
            return &ver;
    return nullptr;
}

const Function* Program::function(const FunName& f) const {
    for (auto& fun : functions)
        if (fun.name == f)
            return &fun;
    return nullptr;
}

Function* Program::function(const FunName& f) {
    for (auto& fun : functions)
        if (fun.name == f)
            return &fun;
    return nullptr;
}

size_t indexOfLabel(const InstructionStream& s, const Label& l) {
    for (size_t i = 0; i < s.size(); ++i)
        if (s[i].label == l)
            return i;
    throw IrError("UnknownLabel", "no instruction labeled '" + l + "'");
}

const Instr& lookup(const InstructionStream& s, const Label& l) {
    return s[indexOfLabel(s, l)].instr;
}

bool fallsThrough(Instr::Kind k) {
    switch (k) {
    case Instr::Kind::Goto:
    case Instr::Kind::Branch:
    case Instr::Kind::Return:
    case Instr::Kind::Stop:
        return false;
    default:
        return true;
    }
}

std::set<Label> successors(const InstructionStream& s, const Label& l) {
    size_t at = indexOfLabel(s, l);
    const Instr& i = s[at].instr;
    switch (i.kind) {
    case Instr::Kind::Goto:
        return {i.l1};
    case Instr::Kind::Branch:
        return {i.l1, i.l2};
    case Instr::Kind::Return:
    case Instr::Kind::Stop:
        return {};
    default:
        if (at + 1 >= s.size())
            throw IrError("FallThroughEnd",
                          "instruction at '" + l + "' falls through the end of the stream");
        return {s[at + 1].label};
    }
}

std::set<Label> predecessors(const InstructionStream& s, const Label& l) {
    indexOfLabel(s, l); // existence check
    std::set<Label> preds;
    for (auto& entry : s) {
        std::set<Label> succ;
        try {
            succ = successors(s, entry.label);
        } catch (const IrError&) {
            continue; // a trailing fall-through has no successors
        }
        if (succ.count(l))
            preds.insert(entry.label);
    }
    return preds;
}

std::string freshName(const std::string& base, const std::set<std::string>& used) {
    if (!used.count(base))
        return base;
    for (int k = 1;; ++k) {
        std::string candidate = base + "_" + std::to_string(k);
        if (!used.count(candidate))
            return candidate;
    }
}

static void collectVars(const SimpleExpr& se, std::set<VarName>& out) {
    if (se.kind == SimpleExpr::Kind::Var)
        out.insert(se.name);
}

std::set<VarName> freeVarsOf(const Expr& e) {
    std::set<VarName> out;
    for (auto& se : e.operands)
        collectVars(se, out);
    return out;
}

std::set<VarName> freeVarsOf(const Varmap& vm) {
    std::set<VarName> out;
    for (auto& entry : vm)
        for (auto& se : entry.expr.operands)
            collectVars(se, out);
    return out;
}

std::set<VarName> assumeMentionedVars(const Instr& assume) {
    std::set<VarName> out;
    for (auto& p : assume.predicates)
        for (auto& se : p.operands)
            collectVars(se, out);
    auto merge = [&](const Varmap& vm) {
        auto vs = freeVarsOf(vm);
        out.insert(vs.begin(), vs.end());
    };
    merge(assume.target.varmap);
    for (auto& f : assume.frames)
        merge(f.varmap);
    return out;
}

std::optional<VarName> declaredVar(const Instr& i) {
    switch (i.kind) {
    case Instr::Kind::VarDecl:
    case Instr::Kind::ArrayAlloc:
    case Instr::Kind::ArrayLit:
    case Instr::Kind::Call:
        return i.var;
    default:
        return std::nullopt;
    }
}

std::optional<VarName> assignedVar(const Instr& i) {
    switch (i.kind) {
    case Instr::Kind::Assign:
    case Instr::Kind::Read:
        return i.var;
    default:
        return std::nullopt;
    }
}

std::set<Label> labelsOf(const InstructionStream& s) {
    std::set<Label> out;
    for (auto& e : s)
        out.insert(e.label);
    return out;
}

std::set<VarName> varNamesOf(const InstructionStream& s, const std::vector<VarName>& params) {
    std::set<VarName> out(params.begin(), params.end());
    auto addExpr = [&](const Expr& e) {
        for (auto& se : e.operands)
            collectVars(se, out);
    };
    for (auto& entry : s) {
        const Instr& i = entry.instr;
        if (!i.var.empty())
            out.insert(i.var);
        addExpr(i.expr);
        addExpr(i.index);
        addExpr(i.callee);
        for (auto& a : i.args)
            addExpr(a);
        for (auto& p : i.predicates)
            addExpr(p);
        for (auto& v : i.target.varmap) {
            out.insert(v.name);
            addExpr(v.expr);
        }
        for (auto& f : i.frames) {
            out.insert(f.retVar);
            for (auto& v : f.varmap) {
                out.insert(v.name);
                addExpr(v.expr);
            }
        }
    }
    return out;
}

std::optional<Expr> substitute(const Expr& e,
                               const std::vector<std::pair<VarName, Expr>>& mapping) {
    auto lookupVar = [&](const VarName& x) -> const Expr* {
        for (auto& [name, repl] : mapping)
            if (name == x)
                return &repl;
        return nullptr;
    };
    if (e.kind == Expr::Kind::Simple) {
        const SimpleExpr& se = e.operands[0];
        if (se.kind == SimpleExpr::Kind::Var)
            if (const Expr* repl = lookupVar(se.name))
                return *repl; // whole-expression replacement, any shape fits
        return e;
    }
    Expr out = e;
    for (auto& se : out.operands) {
        if (se.kind != SimpleExpr::Kind::Var)
            continue;
        const Expr* repl = lookupVar(se.name);
        if (!repl)
            continue;
        if (repl->kind != Expr::Kind::Simple)
            return std::nullopt; // would nest a compound under an operand
        se = repl->operands[0];
    }
    return out;
}

Expr renameVars(const Expr& e, const std::vector<std::pair<VarName, VarName>>& renaming) {
    Expr out = e;
    for (auto& se : out.operands) {
        if (se.kind != SimpleExpr::Kind::Var)
            continue;
        for (auto& [from, to] : renaming)
            if (se.name == from) {
                se.name = to;
                break;
            }
    }
    return out;
}

} // namespace sourir
