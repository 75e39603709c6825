#include "sourir/fuzz.h"

#include "sourir/equivalence.h"
#include "sourir/interp.h"
#include "sourir/text.h"
#include "sourir/wellformed.h"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace sourir {

namespace {

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(uint64_t seed) : gen(seed) {}
    uint64_t next() { return gen(); }
    size_t below(size_t n) { return n ? (size_t)(next() % n) : 0; }
    bool chance(int percent) { return below(100) < (size_t)percent; }
    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[below(v.size())];
    }
};

// Coarse static type used to bias generation toward runs that do not get
// stuck; wrong hints only cost trace length, not correctness.
enum class VType { Int, Bool, Nil, Arr, AnyLit, Any };

bool definitelyNotArray(VType t) {
    return t == VType::Int || t == VType::Bool || t == VType::Nil || t == VType::AnyLit;
}

VType typeOfLit(const Lit& l) {
    switch (l.kind) {
    case Lit::Kind::Int:
        return VType::Int;
    case Lit::Kind::Bool:
        return VType::Bool;
    case Lit::Kind::Nil:
        return VType::Nil;
    }
    return VType::Nil;
}

struct GenVar {
    VarName name;
    VType type;
    int arraySize = -1; // static size when known
};

struct BodyGen {
    const GenConfig& cfg;
    Rng& rng;
    std::vector<FunName> callables; // functions this body may call
    const std::map<FunName, size_t>& arity;
    InstructionStream out;
    std::vector<GenVar> scope;
    int nextVar = 0;
    int nextLabel = 0;
    Label pendingLabel; // label the next emitted instruction must carry

    BodyGen(const GenConfig& cfg, Rng& rng, std::vector<FunName> callables,
            const std::map<FunName, size_t>& arity)
        : cfg(cfg), rng(rng), callables(std::move(callables)), arity(arity) {}

    Label freshLabel() { return "L" + std::to_string(nextLabel++); }
    VarName freshVar() { return "v" + std::to_string(nextVar++); }

    void emit(Instr i) {
        Label l = pendingLabel.empty() ? freshLabel() : pendingLabel;
        pendingLabel.clear();
        out.push_back({l, std::move(i)});
    }

    GenVar* pickVar(auto predicate) {
        std::vector<GenVar*> fit;
        for (auto& v : scope)
            if (predicate(v))
                fit.push_back(&v);
        if (fit.empty())
            return nullptr;
        return fit[rng.below(fit.size())];
    }

    Lit intLit() {
        std::vector<Lit> ints;
        for (auto& l : cfg.literalPool)
            if (l.kind == Lit::Kind::Int)
                ints.push_back(l);
        if (ints.empty())
            return Lit::integer((int64_t)rng.below(8));
        return rng.pick(ints);
    }

    SimpleExpr intOperand() {
        if (rng.chance(50))
            if (GenVar* v = pickVar([](const GenVar& g) { return g.type == VType::Int; }))
                return SimpleExpr::var(v->name);
        return SimpleExpr::literal(intLit());
    }

    Expr intExpr() {
        switch (rng.below(4)) {
        case 0:
            return Expr::simple(intOperand());
        case 1:
            return Expr::binop(Primop::Add, intOperand(), intOperand());
        case 2:
            return Expr::binop(Primop::Mul, intOperand(), intOperand());
        default:
            return Expr::binop(Primop::Sub, intOperand(), intOperand());
        }
    }

    Expr boolExpr() {
        switch (rng.below(4)) {
        case 0: {
            Primop op = rng.chance(50) ? Primop::Lt : Primop::Le;
            return Expr::binop(op, intOperand(), intOperand());
        }
        case 1: {
            // equality never compares two possibly-array operands
            GenVar* v = pickVar([](const GenVar& g) { return definitelyNotArray(g.type); });
            SimpleExpr lhs = v ? SimpleExpr::var(v->name) : SimpleExpr::literal(intLit());
            SimpleExpr rhs = SimpleExpr::literal(rng.pick(cfg.literalPool));
            return Expr::binop(rng.chance(50) ? Primop::Eq : Primop::Ne, lhs, rhs);
        }
        case 2: {
            GenVar* v = pickVar([](const GenVar& g) { return g.type == VType::Bool; });
            if (v)
                return rng.chance(40) ? Expr::primop(Primop::Not, {SimpleExpr::var(v->name)})
                                      : Expr::var(v->name);
            return Expr::literal(Lit::boolean(rng.chance(50)));
        }
        default:
            return Expr::binop(Primop::Gt, intOperand(), intOperand());
        }
    }

    Expr someExpr(VType& outType) {
        if (rng.chance(55)) {
            outType = VType::Int;
            return intExpr();
        }
        if (rng.chance(45)) {
            outType = VType::Bool;
            return boolExpr();
        }
        Lit l = rng.pick(cfg.literalPool);
        outType = typeOfLit(l);
        return Expr::literal(l);
    }

    Expr printableExpr() {
        if (rng.chance(40))
            if (GenVar* v = pickVar([](const GenVar& g) { return definitelyNotArray(g.type); }))
                return Expr::var(v->name);
        return rng.chance(60) ? intExpr() : boolExpr();
    }

    void declVar() {
        VType t = VType::Any;
        Expr e = someExpr(t);
        VarName x = freshVar();
        emit(Instr::varDecl(x, e));
        scope.push_back({x, t, -1});
    }

    void assignVar() {
        GenVar* v = pickVar([](const GenVar& g) { return g.type != VType::Arr; });
        if (!v)
            return declVar();
        VType t = VType::Any;
        Expr e = someExpr(t);
        emit(Instr::assign(v->name, e));
        v->type = t;
    }

    void readVar() {
        GenVar* v = pickVar([](const GenVar& g) { return definitelyNotArray(g.type); });
        if (!v)
            return declVar();
        emit(Instr::read(v->name));
        v->type = VType::AnyLit;
    }

    void makeArray() {
        VarName x = freshVar();
        int n = 1 + (int)rng.below((size_t)std::max(1, cfg.maxArrayLength));
        if (rng.chance(50)) {
            std::vector<Expr> elems;
            for (int i = 0; i < n; ++i)
                elems.push_back(intExpr());
            emit(Instr::arrayLit(x, std::move(elems)));
        } else {
            emit(Instr::arrayAlloc(x, Expr::literal(Lit::integer(n))));
        }
        scope.push_back({x, VType::Arr, n});
    }

    void storeArray() {
        GenVar* a = pickVar([](const GenVar& g) { return g.type == VType::Arr && g.arraySize > 0; });
        if (!a)
            return makeArray();
        int ix = (int)rng.below((size_t)a->arraySize);
        emit(Instr::arrayStore(a->name, Expr::literal(Lit::integer(ix)), intExpr()));
    }

    void loadArray() {
        GenVar* a = pickVar([](const GenVar& g) { return g.type == VType::Arr && g.arraySize > 0; });
        if (!a)
            return declVar();
        int ix = (int)rng.below((size_t)a->arraySize);
        VarName x = freshVar();
        emit(Instr::varDecl(
            x, Expr::arrayRead(SimpleExpr::var(a->name), SimpleExpr::literal(Lit::integer(ix)))));
        scope.push_back({x, VType::Any, -1});
    }

    void callFun() {
        if (callables.empty())
            return declVar();
        const FunName& callee = rng.pick(callables);
        std::vector<Expr> args;
        for (size_t i = 0; i < arity.at(callee); ++i)
            args.push_back(intExpr());
        VarName x = freshVar();
        emit(Instr::call(x, Expr::simple(SimpleExpr::funref(callee)), std::move(args)));
        scope.push_back({x, VType::AnyLit, -1});
    }

    void branchBlock(int budget, int depth) {
        Expr cond = boolExpr();
        Label thenL = freshLabel();
        Label elseL = freshLabel();
        Label joinL = freshLabel();
        emit(Instr::branch(cond, thenL, elseL));
        size_t mark = scope.size();
        pendingLabel = thenL;
        block(budget / 2, depth + 1);
        closeArm(mark);
        emit(Instr::gotoL(joinL));
        pendingLabel = elseL;
        block(budget / 2, depth + 1);
        closeArm(mark);
        emit(Instr::gotoL(joinL));
        pendingLabel = joinL;
    }

    void loopBlock(int budget, int depth) {
        VarName c = freshVar();
        int bound = 1 + (int)rng.below(4);
        emit(Instr::varDecl(c, Expr::literal(Lit::integer(0))));
        scope.push_back({c, VType::Int, -1});
        Label head = freshLabel();
        Label body = freshLabel();
        Label exit = freshLabel();
        pendingLabel = head;
        emit(Instr::branch(Expr::binop(Primop::Lt, SimpleExpr::var(c),
                                       SimpleExpr::literal(Lit::integer(bound))),
                           body, exit));
        size_t mark = scope.size();
        pendingLabel = body;
        block(budget / 2, depth + 1);
        closeArm(mark);
        emit(Instr::assign(c, Expr::binop(Primop::Add, SimpleExpr::var(c),
                                          SimpleExpr::literal(Lit::integer(1)))));
        emit(Instr::gotoL(head));
        pendingLabel = exit;
    }

    // drop everything declared in the arm so the join scopes agree
    void closeArm(size_t mark) {
        while (scope.size() > mark) {
            emit(Instr::drop(scope.back().name));
            scope.pop_back();
        }
    }

    void block(int budget, int depth) {
        int emitted = 0;
        while (emitted < std::max(1, budget)) {
            ++emitted;
            std::vector<std::pair<std::string, int>> menu(cfg.weights.begin(), cfg.weights.end());
            int total = 0;
            for (auto& [k, w] : menu)
                total += w;
            int roll = (int)rng.below((size_t)std::max(1, total));
            std::string kind = menu.back().first;
            for (auto& [k, w] : menu) {
                if (roll < w) {
                    kind = k;
                    break;
                }
                roll -= w;
            }
            if (depth >= 2 && (kind == "branch" || kind == "loop"))
                kind = "decl";
            if (kind == "decl")
                declVar();
            else if (kind == "assign")
                assignVar();
            else if (kind == "print")
                emit(Instr::print(printableExpr()));
            else if (kind == "read")
                readVar();
            else if (kind == "branch")
                branchBlock(std::max(2, budget / 3), depth);
            else if (kind == "loop")
                loopBlock(std::max(2, budget / 3), depth);
            else if (kind == "array")
                makeArray();
            else if (kind == "store")
                storeArray();
            else if (kind == "load")
                loadArray();
            else if (kind == "call")
                callFun();
        }
    }
};

} // namespace

Program genProgram(const GenConfig& cfg) {
    Rng rng(cfg.seed);
    int nCallees = (int)rng.below((size_t)std::max(1, cfg.maxFunctions) + 1);
    std::vector<FunName> names;
    std::map<FunName, size_t> arity;
    for (int i = 0; i < nCallees; ++i) {
        FunName f = "f" + std::to_string(i);
        names.push_back(f);
        arity[f] = rng.below(3);
    }
    arity["main"] = 0;

    Program p;
    // call graph acyclic: fi may call fj only for j > i; main may call all
    for (int i = 0; i < nCallees; ++i) {
        Function fun;
        fun.name = names[i];
        for (size_t k = 0; k < arity[fun.name]; ++k)
            fun.params.push_back("p" + std::to_string(k));
        std::vector<FunName> callables(names.begin() + i + 1, names.end());
        if ((int)callables.size() > cfg.maxCallDepth)
            callables.resize(cfg.maxCallDepth);
        BodyGen gen(cfg, rng, callables, arity);
        for (auto& param : fun.params)
            gen.scope.push_back({param, VType::AnyLit, -1});
        gen.block(3 + (int)rng.below((size_t)std::max(1, cfg.maxInstructions)), 0);
        gen.emit(Instr::ret(gen.rng.chance(70) ? gen.intExpr() : Expr::literal(gen.intLit())));
        Version base;
        base.name = "Vb";
        base.instrs = std::move(gen.out);
        fun.versions.push_back(std::move(base));
        p.functions.push_back(std::move(fun));
    }
    {
        Function fun;
        fun.name = "main";
        BodyGen gen(cfg, rng, names, arity);
        gen.block(3 + (int)rng.below((size_t)std::max(1, cfg.maxInstructions)), 0);
        gen.emit(Instr::stop());
        Version base;
        base.name = "Vb";
        base.instrs = std::move(gen.out);
        fun.versions.push_back(std::move(base));
        p.functions.insert(p.functions.begin(), std::move(fun));
    }

    // optional extra versions via the version-creation passes themselves
    std::vector<FunName> all{"main"};
    all.insert(all.end(), names.begin(), names.end());
    for (auto& f : all) {
        int extra = (int)rng.below((size_t)std::max(1, cfg.maxVersions));
        for (int k = 0; k < extra; ++k) {
            VersionName v = "Vg" + std::to_string(k + 1);
            try {
                Program next = createVersion(p, f, v).program;
                const Version& fresh = next.function(f)->versions.front();
                if (!fresh.instrs.empty() && rng.chance(70)) {
                    const Label at = fresh.instrs[rng.below(fresh.instrs.size())].label;
                    next = insertAssume(next, f, v, at).program;
                    if (rng.chance(70)) {
                        std::set<VarName> scope = scopeAt(next, f, v).at(at);
                        std::vector<VarName> vars(scope.begin(), scope.end());
                        Expr pred = Expr::literal(Lit::boolean(true));
                        if (!vars.empty()) {
                            const VarName& x = vars[rng.below(vars.size())];
                            Primop op = rng.chance(60) ? Primop::Ne : Primop::Eq;
                            pred = Expr::binop(op, SimpleExpr::var(x),
                                               SimpleExpr::literal(rng.pick(cfg.literalPool)));
                        }
                        next = injectPredicate(next, f, v, at, pred).program;
                    }
                }
                if (checkProgram(next).empty())
                    p = std::move(next);
            } catch (const PassError&) {
                // precondition off for this draw; keep the program as-is
            } catch (const IrError&) {
            }
        }
    }
    return p;
}

std::vector<Lit> genInputs(const GenConfig& cfg, const Program& p) {
    Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    size_t reads = 0;
    for (auto& f : p.functions)
        for (auto& v : f.versions)
            for (auto& e : v.instrs)
                if (e.instr.kind == Instr::Kind::Read)
                    ++reads;
    size_t len = reads * 5 + 4 + rng.below(4);
    std::vector<Lit> out;
    out.reserve(len);
    for (size_t i = 0; i < len; ++i)
        out.push_back(rng.pick(cfg.literalPool));
    return out;
}

namespace {

std::vector<std::tuple<FunName, VersionName, Label>> assumesIn(const Program& p, const FunName& f,
                                                               const VersionName& v) {
    std::vector<std::tuple<FunName, VersionName, Label>> out;
    const Function* fun = p.function(f);
    if (!fun)
        return out;
    const Version* ver = fun->version(v);
    if (!ver)
        return out;
    for (auto& e : ver->instrs)
        if (e.instr.kind == Instr::Kind::Assume)
            out.emplace_back(f, v, e.label);
    return out;
}

} // namespace

std::vector<PassInvocation> genPipeline(const GenConfig& cfg, const Program& p) {
    Rng rng(cfg.seed ^ 0xda942042e4dd58b5ull);
    std::vector<PassInvocation> pipeline;
    std::vector<FunName> funs;
    for (auto& f : p.functions)
        funs.push_back(f.name);
    const FunName target = funs[rng.below(funs.size())];
    const VersionName vnew = "Vopt";

    Program current = p;
    auto apply = [&](PassInvocation inv) -> bool {
        try {
            Program next = applyInvocation(current, inv).program;
            if (!checkProgram(next).empty())
                return false;
            current = std::move(next);
            pipeline.push_back(std::move(inv));
            return true;
        } catch (const PassError&) {
            return false;
        } catch (const IrError&) {
            return false;
        }
    };

    apply({"create-version", {{"fn", target}, {"new", vnew}}});

    auto pickAssume = [&]() -> std::optional<Label> {
        auto sites = assumesIn(current, target, vnew);
        if (sites.empty())
            return std::nullopt;
        return std::get<2>(sites[rng.below(sites.size())]);
    };

    int stages = 2 + (int)rng.below(7);
    for (int s = 0; s < stages; ++s) {
        switch (rng.below(10)) {
        case 0: { // insert-assume at a label the previous version also has
            const Function* fun = current.function(target);
            if (!fun || fun->versions.size() < 2)
                break;
            const Version& prev = fun->versions[1];
            const Version& cur = fun->versions[0];
            std::vector<Label> candidates;
            auto prevLabels = labelsOf(prev.instrs);
            for (auto& e : cur.instrs)
                if (prevLabels.count(e.label))
                    candidates.push_back(e.label);
            if (candidates.empty())
                break;
            apply({"insert-assume",
                   {{"fn", target}, {"version", vnew}, {"at", rng.pick(candidates)}}});
            break;
        }
        case 1: { // inject a total predicate
            auto at = pickAssume();
            if (!at)
                break;
            std::set<VarName> scope;
            try {
                scope = scopeAt(current, target, vnew).at(*at);
            } catch (const IrError&) {
                break;
            }
            std::vector<VarName> vars(scope.begin(), scope.end());
            std::string pred = "true";
            if (!vars.empty() && rng.chance(85)) {
                const VarName& x = vars[rng.below(vars.size())];
                pred = x + (rng.chance(60) ? " != " : " == ") + print(rng.pick(cfg.literalPool));
            } else if (rng.chance(15)) {
                pred = "false"; // transparency makes even this safe
            }
            apply({"inject-predicate",
                   {{"fn", target}, {"version", vnew}, {"at", *at}, {"pred", pred}}});
            break;
        }
        case 2:
            apply({"constant-propagate", {{"fn", target}, {"version", vnew}}});
            break;
        case 3:
            apply({"fold-branches", {{"fn", target}, {"version", vnew}}});
            break;
        case 4:
            apply({"remove-unreachable", {{"fn", target}, {"version", vnew}}});
            break;
        case 5:
            apply({"remove-dead-vars", {{"fn", target}, {"version", vnew}}});
            break;
        case 6: { // snapshot a mentioned variable, then try to move the assume
            auto at = pickAssume();
            if (!at)
                break;
            const Version* ver = current.function(target)->version(vnew);
            const Instr& assume = lookup(ver->instrs, *at);
            auto mentioned = assumeMentionedVars(assume);
            if (mentioned.empty())
                break;
            std::vector<VarName> vars(mentioned.begin(), mentioned.end());
            const VarName x = vars[rng.below(vars.size())];
            if (!apply({"snapshot-var",
                        {{"fn", target}, {"version", vnew}, {"at", *at}, {"var", x}}}))
                break;
            // the assume now sits one slot later under a fresh label
            const Version* after = current.function(target)->version(vnew);
            size_t snapAt = indexOfLabel(after->instrs, *at);
            if (snapAt + 1 < after->instrs.size() &&
                after->instrs[snapAt + 1].instr.kind == Instr::Kind::Assume)
                apply({"move-assume",
                       {{"fn", target},
                        {"version", vnew},
                        {"at", after->instrs[snapAt + 1].label}}});
            break;
        }
        case 7: { // hoist a predicate between two assumes
            auto sites = assumesIn(current, target, vnew);
            if (sites.size() < 2)
                break;
            const Label from = std::get<2>(sites[rng.below(sites.size())]);
            const Label to = std::get<2>(sites[rng.below(sites.size())]);
            const Version* ver = current.function(target)->version(vnew);
            const Instr& assume = lookup(ver->instrs, from);
            if (assume.predicates.empty())
                break;
            size_t index = rng.below(assume.predicates.size());
            apply({"hoist-predicate",
                   {{"fn", target},
                    {"version", vnew},
                    {"from", from},
                    {"to", to},
                    {"index", std::to_string(index)}}});
            break;
        }
        case 8: { // compose chained assumes or drop trivial ones
            auto sites = assumesIn(current, target, vnew);
            if (sites.empty())
                break;
            const Label at = std::get<2>(sites[rng.below(sites.size())]);
            if (rng.chance(50))
                apply({"compose-assume", {{"fn", target}, {"version", vnew}, {"at", at}}});
            else
                apply({"remove-trivial-assume",
                       {{"fn", target}, {"version", vnew}, {"at", at}}});
            break;
        }
        case 9: { // inline a direct call
            const Version* ver = current.function(target)->version(vnew);
            if (!ver)
                break;
            std::vector<Label> calls;
            for (auto& e : ver->instrs)
                if (e.instr.kind == Instr::Kind::Call &&
                    e.instr.callee.kind == Expr::Kind::Simple &&
                    e.instr.callee.operands[0].kind == SimpleExpr::Kind::FunRef)
                    calls.push_back(e.label);
            if (calls.empty())
                break;
            apply({"inline", {{"fn", target}, {"version", vnew}, {"at", rng.pick(calls)}}});
            break;
        }
        }
    }
    return pipeline;
}

GenConfig parseGenConfig(const std::string& text) {
    GenConfig cfg;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string kv;
        while (ls >> kv) {
            auto eq = kv.find('=');
            if (eq == std::string::npos)
                continue;
            std::string key = kv.substr(0, eq);
            std::string value = kv.substr(eq + 1);
            if (key == "seed")
                cfg.seed = std::stoull(value);
            else if (key == "maxFunctions")
                cfg.maxFunctions = std::stoi(value);
            else if (key == "maxVersions")
                cfg.maxVersions = std::stoi(value);
            else if (key == "maxInstructions")
                cfg.maxInstructions = std::stoi(value);
            else if (key == "maxArrayLength")
                cfg.maxArrayLength = std::stoi(value);
            else if (key == "maxCallDepth")
                cfg.maxCallDepth = std::stoi(value);
            else if (key == "literalPool")
                cfg.literalPool = parseInputs(value);
            else if (key.rfind("weight.", 0) == 0)
                cfg.weights[key.substr(7)] = std::stoi(value);
        }
    }
    return cfg;
}

std::string printGenConfig(const GenConfig& cfg) {
    std::ostringstream out;
    out << "seed=" << cfg.seed << " maxFunctions=" << cfg.maxFunctions
        << " maxVersions=" << cfg.maxVersions << " maxInstructions=" << cfg.maxInstructions
        << " maxArrayLength=" << cfg.maxArrayLength << " maxCallDepth=" << cfg.maxCallDepth;
    return out.str();
}

FuzzCase runFuzzCase(const GenConfig& base, uint64_t seed, const FuzzOptions& opts) {
    FuzzCase result;
    result.seed = seed;
    GenConfig cfg = base;
    cfg.seed = seed;

    Program p;
    try {
        p = genProgram(cfg);
    } catch (const std::exception& e) {
        result.ok = false;
        result.failure = std::string("generation threw: ") + e.what();
        return result;
    }
    result.programText = print(p);

    auto diags = checkProgram(p);
    if (!diags.empty()) {
        result.ok = false;
        result.failure = "generated program is ill-formed:\n" + renderDiagnostics(diags);
        return result;
    }

    std::vector<PassInvocation> pipeline;
    Program optimized;
    try {
        pipeline = genPipeline(cfg, p);
        for (auto& inv : pipeline)
            result.pipelineText += printInvocation(inv) + "\n";
        auto [opt, reports] = runPipeline(p, pipeline);
        optimized = std::move(opt);
        for (auto& r : reports)
            result.reportText += printReport(r) + "\n";
    } catch (const std::exception& e) {
        result.ok = false;
        result.failure = std::string("pipeline failed: ") + e.what();
        return result;
    }

    for (int s = 0; s < opts.scriptsPerCase; ++s) {
        GenConfig scriptCfg = cfg;
        scriptCfg.seed = seed * 1315423911ull + (uint64_t)s;
        std::vector<Lit> inputs = genInputs(scriptCfg, p);
        if (s == 0)
            result.inputsText = printInputs(inputs) + "\n";
        ++result.scriptsRun;

        DiffResult d = diffPrograms(p, optimized, inputs, opts.fuel);
        if (d.verdict == DiffResult::Verdict::OutcomeMismatch &&
            (d.left.outcome == RunResult::Outcome::FuelExhausted ||
             d.right.outcome == RunResult::Outcome::FuelExhausted)) {
            // one side merely ran out of steps; give both more room once
            d = diffPrograms(p, optimized, inputs, opts.fuel * 10);
        }
        if (d.verdict == DiffResult::Verdict::Equal)
            ++result.equal;
        else if (d.verdict == DiffResult::Verdict::BothFuelExhaustedPrefixEqual)
            ++result.inconclusive;
        else {
            result.ok = false;
            result.failure = "diff before/after pipeline: " + d.render();
            result.inputsText = printInputs(inputs) + "\n";
            return result;
        }

        for (const Program* side : {&p, &optimized}) {
            DiffResult t = checkTransparency(*side, inputs, opts.fuel);
            if (t.verdict == DiffResult::Verdict::OutcomeMismatch &&
                (t.left.outcome == RunResult::Outcome::FuelExhausted ||
                 t.right.outcome == RunResult::Outcome::FuelExhausted))
                t = checkTransparency(*side, inputs, opts.fuel * 10);
            if (!t.passed()) {
                result.ok = false;
                result.failure = std::string("transparency (") +
                                 (side == &p ? "base" : "optimized") + "): " + t.render();
                result.inputsText = printInputs(inputs) + "\n";
                return result;
            }
        }
    }
    return result;
}

std::vector<FuzzCase> runFuzzBatch(const GenConfig& cfg, uint64_t firstSeed, int count,
                                   const FuzzOptions& opts, int threads) {
    std::vector<FuzzCase> results((size_t)count);
    if (threads < 1)
        threads = 1;
    std::atomic<int> nextIndex{0};
    auto worker = [&]() {
        for (;;) {
            int i = nextIndex.fetch_add(1);
            if (i >= count)
                return;
            results[(size_t)i] = runFuzzCase(cfg, firstSeed + (uint64_t)i, opts);
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();
    return results;
}

void writeReproducer(const FuzzCase& c, const std::string& directory) {
    namespace fs = std::filesystem;
    fs::path dir = fs::path(directory) / ("case-" + std::to_string(c.seed));
    fs::create_directories(dir);
    auto write = [&](const char* name, const std::string& content) {
        std::ofstream out(dir / name);
        out << content;
    };
    write("program.sourir", c.programText);
    write("pipeline.txt", c.pipelineText);
    write("inputs.txt", c.inputsText);
    write("report.txt", c.failure.empty() ? c.reportText : c.failure + "\n" + c.reportText);
}

} // namespace sourir
