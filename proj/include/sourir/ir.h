#ifndef SOURIR_IR_H
#define SOURIR_IR_H

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace sourir {

using Label = std::string;
using VarName = std::string;
using FunName = std::string;
using VersionName = std::string;

class IrError : public std::runtime_error {
  public:
    IrError(std::string code, const std::string& msg)
        : std::runtime_error(code + ": " + msg), code(std::move(code)) {}
    std::string code;
};

// Literals: signed 64-bit integers, booleans, nil.
struct Lit {
    enum class Kind { Int, Bool, Nil };
    Kind kind = Kind::Nil;
    int64_t intval = 0;
    bool boolval = false;

    static Lit integer(int64_t v) {
        Lit l;
        l.kind = Kind::Int;
        l.intval = v;
        return l;
    }
    static Lit boolean(bool v) {
        Lit l;
        l.kind = Kind::Bool;
        l.boolval = v;
        return l;
    }
    static Lit nil() { return Lit(); }

    bool isTrue() const { return kind == Kind::Bool && boolval; }
    bool operator==(const Lit& o) const {
        if (kind != o.kind)
            return false;
        switch (kind) {
        case Kind::Int:
            return intval == o.intval;
        case Kind::Bool:
            return boolval == o.boolval;
        case Kind::Nil:
            return true;
        }
        return false;
    }
    bool operator<(const Lit& o) const {
        if (kind != o.kind)
            return kind < o.kind;
        if (kind == Kind::Int)
            return intval < o.intval;
        if (kind == Kind::Bool)
            return boolval < o.boolval;
        return false;
    }
};

struct SimpleExpr {
    enum class Kind { Lit, Var, FunRef };
    Kind kind = Kind::Lit;
    Lit lit;
    std::string name; // variable or function name

    static SimpleExpr literal(Lit l) {
        SimpleExpr e;
        e.kind = Kind::Lit;
        e.lit = l;
        return e;
    }
    static SimpleExpr var(VarName x) {
        SimpleExpr e;
        e.kind = Kind::Var;
        e.name = std::move(x);
        return e;
    }
    static SimpleExpr funref(FunName f) {
        SimpleExpr e;
        e.kind = Kind::FunRef;
        e.name = std::move(f);
        return e;
    }
    bool operator==(const SimpleExpr&) const = default;
};

enum class Primop { Add, Sub, Mul, Div, Eq, Ne, Lt, Le, Gt, Ge, And, Or, Not, Neg };

// Expressions are not nested: every operand is a SimpleExpr.
struct Expr {
    enum class Kind { Simple, ArrayRead, Length, Primop };
    Kind kind = Kind::Simple;
    Primop op = Primop::Add;       // valid when kind == Primop
    std::vector<SimpleExpr> operands; // Simple/Length: 1, ArrayRead: 2 (base, index)

    static Expr simple(SimpleExpr se) {
        Expr e;
        e.kind = Kind::Simple;
        e.operands = {std::move(se)};
        return e;
    }
    static Expr literal(Lit l) { return simple(SimpleExpr::literal(l)); }
    static Expr var(VarName x) { return simple(SimpleExpr::var(std::move(x))); }
    static Expr arrayRead(SimpleExpr base, SimpleExpr index) {
        Expr e;
        e.kind = Kind::ArrayRead;
        e.operands = {std::move(base), std::move(index)};
        return e;
    }
    static Expr length(SimpleExpr base) {
        Expr e;
        e.kind = Kind::Length;
        e.operands = {std::move(base)};
        return e;
    }
    static Expr primop(Primop op, std::vector<SimpleExpr> args) {
        Expr e;
        e.kind = Kind::Primop;
        e.op = op;
        e.operands = std::move(args);
        return e;
    }
    static Expr binop(Primop op, SimpleExpr a, SimpleExpr b) {
        return primop(op, {std::move(a), std::move(b)});
    }
    bool isLiteral() const {
        return kind == Kind::Simple && operands[0].kind == SimpleExpr::Kind::Lit;
    }
    const Lit& asLiteral() const { return operands[0].lit; }
    bool operator==(const Expr&) const = default;
};

struct VarmapEntry {
    VarName name;
    Expr expr;
    bool operator==(const VarmapEntry&) const = default;
};
using Varmap = std::vector<VarmapEntry>;

struct DeoptTarget {
    FunName fun;
    VersionName version;
    Label label;
    Varmap varmap;
    bool operator==(const DeoptTarget&) const = default;
};

struct ExtraFrame {
    FunName fun;
    VersionName version;
    Label label; // return label
    VarName retVar;
    Varmap varmap;
    bool operator==(const ExtraFrame&) const = default;
};

// The instruction set of Fig 3, one constructor per form.
struct Instr {
    enum class Kind {
        VarDecl,    // var x = e
        Drop,       // drop x
        Assign,     // x <- e
        ArrayAlloc, // array x[e]
        ArrayLit,   // array x = [e1, ..., en]
        ArrayStore, // x[e1] <- e2
        Branch,     // branch e L1 L2
        Goto,       // goto L
        Print,      // print e
        Read,       // read x
        Call,       // call x = e(e1, ..., en)
        Return,     // return e
        Assume,     // assume e* else F.V.L [..] (, F.V.L ret x [..])*
        Stop,       // stop
    };
    Kind kind = Kind::Stop;
    VarName var;            // VarDecl/Drop/Assign/ArrayAlloc/ArrayLit/ArrayStore/Read/Call
    Expr expr;              // VarDecl/Assign rhs, ArrayAlloc size, Branch cond, Print, Return, ArrayStore value
    Expr index;             // ArrayStore index
    Expr callee;            // Call
    std::vector<Expr> args; // ArrayLit elements, Call arguments
    Label l1, l2;           // Branch targets; Goto uses l1
    std::vector<Expr> predicates;   // Assume
    DeoptTarget target;             // Assume
    std::vector<ExtraFrame> frames; // Assume

    static Instr varDecl(VarName x, Expr e);
    static Instr drop(VarName x);
    static Instr assign(VarName x, Expr e);
    static Instr arrayAlloc(VarName x, Expr size);
    static Instr arrayLit(VarName x, std::vector<Expr> elems);
    static Instr arrayStore(VarName x, Expr index, Expr value);
    static Instr branch(Expr cond, Label l1, Label l2);
    static Instr gotoL(Label l);
    static Instr print(Expr e);
    static Instr read(VarName x);
    static Instr call(VarName x, Expr callee, std::vector<Expr> args);
    static Instr ret(Expr e);
    static Instr assume(std::vector<Expr> predicates, DeoptTarget target,
                        std::vector<ExtraFrame> frames);
    static Instr stop();

    bool operator==(const Instr&) const = default;
};

struct InstrEntry {
    Label label;
    Instr instr;
    bool operator==(const InstrEntry&) const = default;
};
using InstructionStream = std::vector<InstrEntry>;

struct Version {
    VersionName name;
    InstructionStream instrs;
    bool operator==(const Version&) const = default;
};

struct Function {
    FunName name;
    std::vector<VarName> params;
    std::vector<Version> versions; // first entry is the active version

    const Version* version(const VersionName& v) const;
    Version* version(const VersionName& v);
    const Version& active() const { return versions.front(); }
    bool operator==(const Function&) const = default;
};

struct Program {
    std::vector<Function> functions; // contains a zero-parameter "main"

    const Function* function(const FunName& f) const;
    Function* function(const FunName& f);
    bool operator==(const Program&) const = default;
};

// Position/label utilities over one instruction stream.
size_t indexOfLabel(const InstructionStream& s, const Label& l); // throws UnknownLabel
const Instr& lookup(const InstructionStream& s, const Label& l);
std::set<Label> successors(const InstructionStream& s, const Label& l);
std::set<Label> predecessors(const InstructionStream& s, const Label& l);
bool fallsThrough(Instr::Kind k); // control continues at the next instruction

// Deterministic fresh-name generation: returns `base` if unused, else the
// smallest `base_k` not colliding.
std::string freshName(const std::string& base, const std::set<std::string>& used);

std::set<VarName> freeVarsOf(const Expr& e);
std::set<VarName> freeVarsOf(const Varmap& vm);
// All variables the assume metadata reads (predicates + varmap exprs + frame exprs).
std::set<VarName> assumeMentionedVars(const Instr& assume);

// Variable the instruction declares (var/array/call), if any.
std::optional<VarName> declaredVar(const Instr& i);
// Variable the instruction writes without declaring (assign/read), if any.
std::optional<VarName> assignedVar(const Instr& i);

// All labels appearing in one stream (for freshness checks).
std::set<Label> labelsOf(const InstructionStream& s);
// All variable names appearing anywhere in a stream (decls, uses, drops).
std::set<VarName> varNamesOf(const InstructionStream& s, const std::vector<VarName>& params);

// Substitute, in every operand position of `e`, variables by the mapped
// expressions. A compound replacement in an operand of a compound expression
// has no flat form; returns nullopt in that case.
std::optional<Expr> substitute(const Expr& e,
                               const std::vector<std::pair<VarName, Expr>>& mapping);
// Rename free variables in an expression (total; names map to names).
Expr renameVars(const Expr& e, const std::vector<std::pair<VarName, VarName>>& renaming);

} // namespace sourir

#endif
