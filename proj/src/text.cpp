#include "sourir/text.h"

#include <cctype>
#include <charconv>
#include <sstream>

namespace sourir {

namespace {

struct Token {
    enum class Kind {
        Ident,
        Int,
        Punct, // single/double char: ( ) [ ] , : . = & <- == != <= >= < > + - * / && || !
        End,
    };
    Kind kind;
    std::string text;
    int64_t intval = 0;
    int col = 0;
};

bool isIdentStart(char c) { return std::isalpha((unsigned char)c) || c == '_'; }
bool isIdentChar(char c) { return std::isalnum((unsigned char)c) || c == '_'; }

class LineLexer {
  public:
    LineLexer(const std::string& line, int lineno) : line(line), lineno(lineno) { advance(); }

    const Token& peek() const { return tok; }
    Token next() {
        Token t = tok;
        advance();
        return t;
    }
    bool atEnd() const { return tok.kind == Token::Kind::End; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(lineno, tok.col ? tok.col : (int)pos + 1, msg);
    }

    Token expectIdent(const std::string& what) {
        if (tok.kind != Token::Kind::Ident)
            fail("expected " + what);
        return next();
    }
    void expectPunct(const std::string& p) {
        if (tok.kind != Token::Kind::Punct || tok.text != p)
            fail("expected '" + p + "'");
        advance();
    }
    bool tryPunct(const std::string& p) {
        if (tok.kind == Token::Kind::Punct && tok.text == p) {
            advance();
            return true;
        }
        return false;
    }
    bool peekPunct(const std::string& p) const {
        return tok.kind == Token::Kind::Punct && tok.text == p;
    }
    bool peekIdent(const std::string& id) const {
        return tok.kind == Token::Kind::Ident && tok.text == id;
    }
    int lineNumber() const { return lineno; }

  private:
    void advance() {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t'))
            ++pos;
        tok.col = (int)pos + 1;
        if (pos >= line.size() || line[pos] == '#') {
            tok.kind = Token::Kind::End;
            tok.text.clear();
            return;
        }
        char c = line[pos];
        if (isIdentStart(c)) {
            size_t start = pos;
            while (pos < line.size() && isIdentChar(line[pos]))
                ++pos;
            tok.kind = Token::Kind::Ident;
            tok.text = line.substr(start, pos - start);
            lastWasOperand = true;
            return;
        }
        if (std::isdigit((unsigned char)c)) {
            lexInt(pos);
            return;
        }
        // negative integer literal: '-' directly followed by digits
        if (c == '-' && pos + 1 < line.size() && std::isdigit((unsigned char)line[pos + 1]) &&
            lastWasOperand == false) {
            lexInt(pos);
            return;
        }
        static const char* twoChar[] = {"<-", "==", "!=", "<=", ">=", "&&", "||"};
        for (auto* p : twoChar) {
            if (line.compare(pos, 2, p) == 0) {
                tok.kind = Token::Kind::Punct;
                tok.text = p;
                pos += 2;
                lastWasOperand = false;
                return;
            }
        }
        static const std::string oneChar = "()[],:.=&<>+-*/!";
        if (oneChar.find(c) != std::string::npos) {
            tok.kind = Token::Kind::Punct;
            tok.text = std::string(1, c);
            ++pos;
            lastWasOperand = (c == ')' || c == ']');
            return;
        }
        throw ParseError(lineno, (int)pos + 1, std::string("unexpected character '") + c + "'");
    }

    void lexInt(size_t start) {
        size_t end = start + (line[start] == '-' ? 1 : 0);
        while (end < line.size() && std::isdigit((unsigned char)line[end]))
            ++end;
        int64_t value = 0;
        auto res = std::from_chars(line.data() + start, line.data() + end, value);
        if (res.ec != std::errc() || res.ptr != line.data() + end)
            throw ParseError(lineno, (int)start + 1, "integer literal out of range");
        tok.kind = Token::Kind::Int;
        tok.text = line.substr(start, end - start);
        tok.intval = value;
        pos = end;
        lastWasOperand = true;
    }

    const std::string& line;
    int lineno;
    size_t pos = 0;
    Token tok;
    // Disambiguates binary minus from a negative literal: `x - 1` vs `var y = -1`.
    bool lastWasOperand = false;
};

const std::set<std::string> keywords = {
    "func", "version", "var",  "drop",   "array", "branch", "goto", "print", "read",
    "call", "return",  "stop", "assume", "else",  "ret",    "true", "false", "nil",
    "length"};

std::string identNonKeyword(LineLexer& lx, const std::string& what) {
    Token t = lx.expectIdent(what);
    if (keywords.count(t.text))
        lx.fail("'" + t.text + "' is a keyword, expected " + what);
    return t.text;
}

SimpleExpr parseSimple(LineLexer& lx) {
    const Token& t = lx.peek();
    if (t.kind == Token::Kind::Int)
        return SimpleExpr::literal(Lit::integer(lx.next().intval));
    if (t.kind == Token::Kind::Punct && t.text == "&") {
        lx.next();
        return SimpleExpr::funref(identNonKeyword(lx, "function name"));
    }
    if (t.kind == Token::Kind::Punct && t.text == "-") {
        // `- <int>` with a space still folds to a negative literal
        LineLexer look = lx;
        look.next();
        if (look.peek().kind == Token::Kind::Int) {
            lx.next();
            int64_t v = lx.next().intval;
            if (v < 0)
                lx.fail("doubly negated literal");
            return SimpleExpr::literal(Lit::integer(-v));
        }
        lx.fail("expected a simple expression");
    }
    if (t.kind == Token::Kind::Ident) {
        if (t.text == "true" || t.text == "false")
            return SimpleExpr::literal(Lit::boolean(lx.next().text == "true"));
        if (t.text == "nil") {
            lx.next();
            return SimpleExpr::literal(Lit::nil());
        }
        if (!keywords.count(t.text))
            return SimpleExpr::var(lx.next().text);
    }
    if (t.kind == Token::Kind::Punct && (t.text == "(" || t.text == "!"))
        lx.fail("operands must be simple expressions (no nesting)");
    lx.fail("expected a simple expression");
}

std::optional<Primop> peekBinop(LineLexer& lx) {
    if (lx.peek().kind != Token::Kind::Punct)
        return std::nullopt;
    const std::string& p = lx.peek().text;
    if (p == "+")
        return Primop::Add;
    if (p == "-")
        return Primop::Sub;
    if (p == "*")
        return Primop::Mul;
    if (p == "/")
        return Primop::Div;
    if (p == "==")
        return Primop::Eq;
    if (p == "!=")
        return Primop::Ne;
    if (p == "<")
        return Primop::Lt;
    if (p == "<=")
        return Primop::Le;
    if (p == ">")
        return Primop::Gt;
    if (p == ">=")
        return Primop::Ge;
    if (p == "&&")
        return Primop::And;
    if (p == "||")
        return Primop::Or;
    return std::nullopt;
}

Expr finishBinop(LineLexer& lx, SimpleExpr first) {
    if (auto op = peekBinop(lx)) {
        lx.next();
        SimpleExpr second = parseSimple(lx);
        if (peekBinop(lx))
            lx.fail("operands must be simple expressions (no nesting)");
        return Expr::binop(*op, first, second);
    }
    return Expr::simple(first);
}

Expr parseExpr(LineLexer& lx) {
    if (lx.peekIdent("length")) {
        lx.next();
        lx.expectPunct("(");
        SimpleExpr base = parseSimple(lx);
        lx.expectPunct(")");
        return Expr::length(base);
    }
    if (lx.peekPunct("!")) {
        lx.next();
        return Expr::primop(Primop::Not, {parseSimple(lx)});
    }
    if (lx.peekPunct("-")) {
        // unary minus: negative literals fold, everything else is Neg
        LineLexer look = lx;
        look.next();
        if (look.peek().kind == Token::Kind::Int)
            return finishBinop(lx, parseSimple(lx));
        lx.next();
        return Expr::primop(Primop::Neg, {parseSimple(lx)});
    }
    SimpleExpr first = parseSimple(lx);
    if (lx.tryPunct("[")) {
        SimpleExpr index = parseSimple(lx);
        lx.expectPunct("]");
        return Expr::arrayRead(first, index);
    }
    return finishBinop(lx, first);
}

class Parser {
  public:
    explicit Parser(const std::string& text) : text(text) {}

    Program run() {
        splitLines();
        Program p;
        while (!atEnd()) {
            if (blankLine())
                continue;
            p.functions.push_back(parseFunction());
        }
        finishStream(p);
        resolveCallees(p);
        return p;
    }

  private:
    struct Line {
        std::string text;
        int number;
    };

    void splitLines() {
        std::istringstream in(text);
        std::string l;
        int n = 1;
        while (std::getline(in, l)) {
            if (!l.empty() && l.back() == '\r')
                l.pop_back();
            lines.push_back({l, n++});
        }
    }

    bool atEnd() const { return cursor >= lines.size(); }
    bool blankLine() {
        LineLexer lx(lines[cursor].text, lines[cursor].number);
        if (lx.atEnd()) {
            ++cursor;
            return true;
        }
        return false;
    }

    [[noreturn]] void failAt(int line, const std::string& msg) { throw ParseError(line, 1, msg); }

    Function parseFunction() {
        LineLexer lx(lines[cursor].text, lines[cursor].number);
        if (!lx.peekIdent("func"))
            lx.fail("expected 'func'");
        lx.next();
        Function f;
        f.name = identNonKeyword(lx, "function name");
        lx.expectPunct("(");
        if (!lx.tryPunct(")")) {
            for (;;) {
                f.params.push_back(identNonKeyword(lx, "parameter name"));
                if (lx.tryPunct(")"))
                    break;
                lx.expectPunct(",");
            }
        }
        if (!lx.atEnd())
            lx.fail("trailing tokens after function header");
        ++cursor;
        while (!atEnd()) {
            if (blankLine())
                continue;
            LineLexer probe(lines[cursor].text, lines[cursor].number);
            if (probe.peekIdent("func"))
                break;
            if (!probe.peekIdent("version"))
                failAt(lines[cursor].number, "expected 'version' inside function");
            f.versions.push_back(parseVersion());
        }
        if (f.versions.empty())
            failAt(lines[cursor > 0 ? cursor - 1 : 0].number >= 0 ? lines[cursor - 1].number : 1,
                   "function '" + f.name + "' has no versions");
        return f;
    }

    Version parseVersion() {
        LineLexer lx(lines[cursor].text, lines[cursor].number);
        lx.next(); // 'version'
        Version v;
        v.name = identNonKeyword(lx, "version label");
        if (!lx.atEnd())
            lx.fail("trailing tokens after version header");
        ++cursor;
        while (!atEnd()) {
            if (blankLine())
                continue;
            LineLexer probe(lines[cursor].text, lines[cursor].number);
            if (probe.peekIdent("func") || probe.peekIdent("version"))
                break;
            v.instrs.push_back(parseInstrLine());
        }
        return v;
    }

    InstrEntry parseInstrLine() {
        LineLexer lx(lines[cursor].text, lines[cursor].number);
        InstrEntry entry;
        // optional "L:" prefix; an identifier followed by ':' is a label
        if (lx.peek().kind == Token::Kind::Ident && !keywords.count(lx.peek().text)) {
            LineLexer look = lx;
            look.next();
            if (look.peekPunct(":")) {
                entry.label = lx.next().text;
                lx.expectPunct(":");
            }
        }
        entry.instr = parseInstr(lx);
        if (!lx.atEnd())
            lx.fail("trailing tokens after instruction");
        ++cursor;
        return entry;
    }

    Instr parseInstr(LineLexer& lx) {
        const Token& t = lx.peek();
        if (t.kind == Token::Kind::Ident) {
            const std::string& kw = t.text;
            if (kw == "var") {
                lx.next();
                VarName x = identNonKeyword(lx, "variable name");
                lx.expectPunct("=");
                return Instr::varDecl(x, parseExpr(lx));
            }
            if (kw == "drop") {
                lx.next();
                return Instr::drop(identNonKeyword(lx, "variable name"));
            }
            if (kw == "array") {
                lx.next();
                VarName x = identNonKeyword(lx, "variable name");
                if (lx.tryPunct("[")) {
                    Expr size = parseExpr(lx);
                    lx.expectPunct("]");
                    return Instr::arrayAlloc(x, size);
                }
                lx.expectPunct("=");
                lx.expectPunct("[");
                std::vector<Expr> elems;
                if (!lx.tryPunct("]")) {
                    for (;;) {
                        elems.push_back(parseExpr(lx));
                        if (lx.tryPunct("]"))
                            break;
                        lx.expectPunct(",");
                    }
                }
                return Instr::arrayLit(x, std::move(elems));
            }
            if (kw == "branch") {
                lx.next();
                Expr cond = parseExpr(lx);
                Label l1 = identNonKeyword(lx, "branch target");
                Label l2 = identNonKeyword(lx, "branch target");
                return Instr::branch(cond, l1, l2);
            }
            if (kw == "goto") {
                lx.next();
                return Instr::gotoL(identNonKeyword(lx, "goto target"));
            }
            if (kw == "print") {
                lx.next();
                return Instr::print(parseExpr(lx));
            }
            if (kw == "read") {
                lx.next();
                return Instr::read(identNonKeyword(lx, "variable name"));
            }
            if (kw == "call") {
                lx.next();
                VarName x = identNonKeyword(lx, "result variable");
                lx.expectPunct("=");
                SimpleExpr callee = parseSimple(lx);
                lx.expectPunct("(");
                std::vector<Expr> args;
                if (!lx.tryPunct(")")) {
                    for (;;) {
                        args.push_back(parseExpr(lx));
                        if (lx.tryPunct(")"))
                            break;
                        lx.expectPunct(",");
                    }
                }
                return Instr::call(x, Expr::simple(callee), std::move(args));
            }
            if (kw == "return") {
                lx.next();
                return Instr::ret(parseExpr(lx));
            }
            if (kw == "stop") {
                lx.next();
                return Instr::stop();
            }
            if (kw == "assume")
                return parseAssume(lx);
            if (!keywords.count(kw)) {
                // x <- e  or  x[e1] <- e2
                VarName x = lx.next().text;
                if (lx.tryPunct("[")) {
                    Expr index = parseExpr(lx);
                    lx.expectPunct("]");
                    lx.expectPunct("<-");
                    return Instr::arrayStore(x, index, parseExpr(lx));
                }
                lx.expectPunct("<-");
                return Instr::assign(x, parseExpr(lx));
            }
        }
        lx.fail("expected an instruction");
    }

    Instr parseAssume(LineLexer& lx) {
        lx.next(); // 'assume'
        std::vector<Expr> preds;
        if (!lx.peekIdent("else")) {
            for (;;) {
                preds.push_back(parseExpr(lx));
                if (lx.peekIdent("else"))
                    break;
                lx.expectPunct(",");
            }
        }
        lx.next(); // 'else'
        DeoptTarget target;
        parseTargetRef(lx, target.fun, target.version, target.label);
        target.varmap = parseVarmap(lx);
        std::vector<ExtraFrame> frames;
        while (lx.tryPunct(",")) {
            ExtraFrame f;
            parseTargetRef(lx, f.fun, f.version, f.label);
            if (!lx.peekIdent("ret"))
                lx.fail("expected 'ret' in extra frame");
            lx.next();
            f.retVar = identNonKeyword(lx, "return variable");
            f.varmap = parseVarmap(lx);
            frames.push_back(std::move(f));
        }
        return Instr::assume(std::move(preds), std::move(target), std::move(frames));
    }

    void parseTargetRef(LineLexer& lx, FunName& f, VersionName& v, Label& l) {
        f = identNonKeyword(lx, "function name");
        lx.expectPunct(".");
        v = identNonKeyword(lx, "version label");
        lx.expectPunct(".");
        l = identNonKeyword(lx, "instruction label");
    }

    Varmap parseVarmap(LineLexer& lx) {
        lx.expectPunct("[");
        Varmap vm;
        if (lx.tryPunct("]"))
            return vm;
        for (;;) {
            VarmapEntry e;
            e.name = identNonKeyword(lx, "variable name");
            lx.expectPunct("=");
            e.expr = parseExpr(lx);
            vm.push_back(std::move(e));
            if (lx.tryPunct("]"))
                break;
            lx.expectPunct(",");
        }
        return vm;
    }

    // Synthesize _0, _1, ... for unlabeled instructions, per stream, skipping
    // any name the user already took.
    void finishStream(Program& p) {
        for (auto& f : p.functions) {
            for (auto& v : f.versions) {
                std::set<Label> taken;
                for (auto& e : v.instrs)
                    if (!e.label.empty() && !taken.insert(e.label).second)
                        throw ParseError(0, 0, "duplicate label '" + e.label + "' in " + f.name +
                                                   "." + v.name);
                int next = 0;
                for (auto& e : v.instrs) {
                    if (!e.label.empty())
                        continue;
                    std::string candidate;
                    do {
                        candidate = "_" + std::to_string(next++);
                    } while (taken.count(candidate));
                    e.label = candidate;
                    taken.insert(candidate);
                }
            }
        }
    }

    // A bare identifier in callee position refers to the function of that name
    // when one exists; otherwise it stays a variable reference.
    void resolveCallees(Program& p) {
        std::set<std::string> names;
        for (auto& f : p.functions)
            names.insert(f.name);
        for (auto& f : p.functions)
            for (auto& v : f.versions)
                for (auto& e : v.instrs) {
                    if (e.instr.kind != Instr::Kind::Call)
                        continue;
                    auto& callee = e.instr.callee;
                    if (callee.kind == Expr::Kind::Simple &&
                        callee.operands[0].kind == SimpleExpr::Kind::Var &&
                        names.count(callee.operands[0].name))
                        callee.operands[0].kind = SimpleExpr::Kind::FunRef;
                }
    }

    const std::string& text;
    std::vector<Line> lines;
    size_t cursor = 0;
};

} // namespace

Program parse(const std::string& text) { return Parser(text).run(); }

Expr parseExprText(const std::string& text) {
    LineLexer lx(text, 1);
    Expr e = parseExpr(lx);
    if (!lx.atEnd())
        lx.fail("trailing tokens after expression");
    return e;
}

std::string print(const Lit& l) {
    switch (l.kind) {
    case Lit::Kind::Int:
        return std::to_string(l.intval);
    case Lit::Kind::Bool:
        return l.boolval ? "true" : "false";
    case Lit::Kind::Nil:
        return "nil";
    }
    return "nil";
}

static std::string print(const SimpleExpr& se) {
    switch (se.kind) {
    case SimpleExpr::Kind::Lit:
        return print(se.lit);
    case SimpleExpr::Kind::Var:
        return se.name;
    case SimpleExpr::Kind::FunRef:
        return "&" + se.name;
    }
    return "";
}

static const char* opToken(Primop op) {
    switch (op) {
    case Primop::Add:
        return "+";
    case Primop::Sub:
        return "-";
    case Primop::Mul:
        return "*";
    case Primop::Div:
        return "/";
    case Primop::Eq:
        return "==";
    case Primop::Ne:
        return "!=";
    case Primop::Lt:
        return "<";
    case Primop::Le:
        return "<=";
    case Primop::Gt:
        return ">";
    case Primop::Ge:
        return ">=";
    case Primop::And:
        return "&&";
    case Primop::Or:
        return "||";
    case Primop::Not:
        return "!";
    case Primop::Neg:
        return "-";
    }
    return "?";
}

std::string print(const Expr& e) {
    switch (e.kind) {
    case Expr::Kind::Simple:
        return print(e.operands[0]);
    case Expr::Kind::ArrayRead:
        return print(e.operands[0]) + "[" + print(e.operands[1]) + "]";
    case Expr::Kind::Length:
        return "length(" + print(e.operands[0]) + ")";
    case Expr::Kind::Primop:
        if (e.op == Primop::Not)
            return "!" + print(e.operands[0]);
        if (e.op == Primop::Neg) {
            std::string inner = print(e.operands[0]);
            return inner.front() == '-' ? "- " + inner : "-" + inner;
        }
        return print(e.operands[0]) + " " + opToken(e.op) + " " + print(e.operands[1]);
    }
    return "";
}

static std::string print(const Varmap& vm) {
    std::string out = "[";
    for (size_t i = 0; i < vm.size(); ++i) {
        if (i)
            out += ", ";
        out += vm[i].name + " = " + print(vm[i].expr);
    }
    return out + "]";
}

static std::string printExprList(const std::vector<Expr>& es) {
    std::string out;
    for (size_t i = 0; i < es.size(); ++i) {
        if (i)
            out += ", ";
        out += print(es[i]);
    }
    return out;
}

std::string print(const Instr& i) {
    switch (i.kind) {
    case Instr::Kind::VarDecl:
        return "var " + i.var + " = " + print(i.expr);
    case Instr::Kind::Drop:
        return "drop " + i.var;
    case Instr::Kind::Assign:
        return i.var + " <- " + print(i.expr);
    case Instr::Kind::ArrayAlloc:
        return "array " + i.var + "[" + print(i.expr) + "]";
    case Instr::Kind::ArrayLit:
        return "array " + i.var + " = [" + printExprList(i.args) + "]";
    case Instr::Kind::ArrayStore:
        return i.var + "[" + print(i.index) + "] <- " + print(i.expr);
    case Instr::Kind::Branch:
        return "branch " + print(i.expr) + " " + i.l1 + " " + i.l2;
    case Instr::Kind::Goto:
        return "goto " + i.l1;
    case Instr::Kind::Print:
        return "print " + print(i.expr);
    case Instr::Kind::Read:
        return "read " + i.var;
    case Instr::Kind::Call:
        return "call " + i.var + " = " + print(i.callee) + "(" + printExprList(i.args) + ")";
    case Instr::Kind::Return:
        return "return " + print(i.expr);
    case Instr::Kind::Stop:
        return "stop";
    case Instr::Kind::Assume: {
        std::string out = "assume ";
        out += printExprList(i.predicates);
        if (!i.predicates.empty())
            out += " ";
        out += "else " + i.target.fun + "." + i.target.version + "." + i.target.label + " " +
               print(i.target.varmap);
        for (auto& f : i.frames)
            out += ", " + f.fun + "." + f.version + "." + f.label + " ret " + f.retVar + " " +
                   print(f.varmap);
        return out;
    }
    }
    return "";
}

std::string print(const Program& p) {
    std::ostringstream out;
    for (auto& f : p.functions) {
        out << "func " << f.name << "(";
        for (size_t i = 0; i < f.params.size(); ++i) {
            if (i)
                out << ", ";
            out << f.params[i];
        }
        out << ")\n";
        for (auto& v : f.versions) {
            out << "  version " << v.name << "\n";
            for (auto& e : v.instrs)
                out << "    " << e.label << ": " << print(e.instr) << "\n";
        }
    }
    return out.str();
}

std::vector<Lit> parseInputs(const std::string& text) {
    std::vector<Lit> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        LineLexer lx(line, lineno);
        while (!lx.atEnd()) {
            const Token& t = lx.peek();
            if (t.kind == Token::Kind::Int) {
                out.push_back(Lit::integer(lx.next().intval));
            } else if (t.kind == Token::Kind::Ident &&
                       (t.text == "true" || t.text == "false")) {
                out.push_back(Lit::boolean(lx.next().text == "true"));
            } else if (t.kind == Token::Kind::Ident && t.text == "nil") {
                lx.next();
                out.push_back(Lit::nil());
            } else {
                lx.fail("expected a literal");
            }
            if (!lx.atEnd())
                lx.expectPunct(",");
        }
    }
    return out;
}

std::string printInputs(const std::vector<Lit>& inputs) {
    std::string out;
    for (size_t i = 0; i < inputs.size(); ++i) {
        if (i)
            out += ", ";
        out += print(inputs[i]);
    }
    return out;
}

} // namespace sourir
