#include "sourir/equivalence.h"

#include "sourir/passes.h"
#include "sourir/text.h"
#include "sourir/wellformed.h"

#include <algorithm>

namespace sourir {

std::string DiffResult::render() const {
    std::string out;
    switch (verdict) {
    case Verdict::Equal:
        out = "EQUAL";
        break;
    case Verdict::Diverged:
        out = "DIVERGED at " + std::to_string(position) +
              ": left=" + (leftAction ? printAction(*leftAction) : "<none>") +
              " right=" + (rightAction ? printAction(*rightAction) : "<none>");
        break;
    case Verdict::OutcomeMismatch:
        out = "OUTCOME left=" + left.outcomeString() + " right=" + right.outcomeString();
        break;
    case Verdict::BothFuelExhaustedPrefixEqual:
        out = "INCONCLUSIVE fuel=" + std::to_string(std::max(left.steps, right.steps));
        break;
    }
    out += "\n--- left trace\n" + printTrace(left.trace);
    out += "--- right trace\n" + printTrace(right.trace);
    return out;
}

DiffResult compareRuns(RunResult left, RunResult right, uint64_t fuel) {
    (void)fuel;
    DiffResult d;
    d.left = std::move(left);
    d.right = std::move(right);
    const Trace& lt = d.left.trace;
    const Trace& rt = d.right.trace;
    size_t common = std::min(lt.size(), rt.size());
    for (size_t i = 0; i < common; ++i) {
        if (!(lt[i] == rt[i])) {
            d.verdict = DiffResult::Verdict::Diverged;
            d.position = i;
            d.leftAction = lt[i];
            d.rightAction = rt[i];
            return d;
        }
    }
    bool leftFuel = d.left.outcome == RunResult::Outcome::FuelExhausted;
    bool rightFuel = d.right.outcome == RunResult::Outcome::FuelExhausted;
    if (leftFuel && rightFuel) {
        // prefixes agree; neither run finished, so this is all we can know
        d.verdict = DiffResult::Verdict::BothFuelExhaustedPrefixEqual;
        return d;
    }
    if (lt.size() != rt.size()) {
        // a fuel-starved side that merely fell behind is an outcome problem,
        // not a trace conflict
        bool shorterIsFuel = (lt.size() < rt.size()) ? leftFuel : rightFuel;
        if (shorterIsFuel) {
            d.verdict = DiffResult::Verdict::OutcomeMismatch;
            return d;
        }
        d.verdict = DiffResult::Verdict::Diverged;
        d.position = common;
        if (common < lt.size())
            d.leftAction = lt[common];
        if (common < rt.size())
            d.rightAction = rt[common];
        return d;
    }
    bool sameOutcome = d.left.outcome == d.right.outcome;
    if (sameOutcome && d.left.outcome == RunResult::Outcome::RuntimeError)
        sameOutcome = d.left.error.kind == d.right.error.kind;
    d.verdict = sameOutcome ? DiffResult::Verdict::Equal : DiffResult::Verdict::OutcomeMismatch;
    return d;
}

DiffResult diffPrograms(const Program& p1, const Program& p2, const std::vector<Lit>& inputs,
                        uint64_t fuel) {
    return compareRuns(run(p1, inputs, fuel), run(p2, inputs, fuel), fuel);
}

Program withActiveVersion(const Program& p, const FunName& f, const VersionName& v) {
    Program out = p;
    Function* fun = out.function(f);
    if (!fun)
        throw IrError("UnknownFunction", f);
    size_t at = 0;
    while (at < fun->versions.size() && fun->versions[at].name != v)
        ++at;
    if (at >= fun->versions.size())
        throw IrError("UnknownVersion", f + "." + v);
    std::rotate(fun->versions.begin(), fun->versions.begin() + at, fun->versions.begin() + at + 1);
    return out;
}

Program withReadArgsHarness(const Program& p, const FunName& f) {
    const Function* fun = p.function(f);
    if (!fun)
        throw IrError("UnknownFunction", f);
    if (f == "main")
        return p;
    Program out = p;
    if (Function* main = out.function("main")) {
        // replace the existing driver wholesale
        out.functions.erase(out.functions.begin() + (main - out.functions.data()));
    }
    Function driver;
    driver.name = "main";
    Version v;
    v.name = "Vharness";
    std::vector<Expr> args;
    for (auto& param : fun->params) {
        VarName x = "a_" + param;
        v.instrs.push_back({"", Instr::varDecl(x, Expr::literal(Lit::nil()))});
        v.instrs.push_back({"", Instr::read(x)});
        args.push_back(Expr::var(x));
    }
    v.instrs.push_back(
        {"", Instr::call("r", Expr::simple(SimpleExpr::funref(f)), std::move(args))});
    v.instrs.push_back({"", Instr::print(Expr::var("r"))});
    v.instrs.push_back({"", Instr::stop()});
    int k = 0;
    for (auto& e : v.instrs)
        e.label = "_h" + std::to_string(k++);
    driver.versions.push_back(std::move(v));
    out.functions.insert(out.functions.begin(), std::move(driver));
    return out;
}

DiffResult diffVersions(const Program& p, const FunName& f, const VersionName& v1,
                        const VersionName& v2, const std::vector<Lit>& inputs, uint64_t fuel,
                        const DiffVersionsOptions& opts) {
    Program base = opts.synthesizeHarness ? withReadArgsHarness(p, f) : p;
    Program p1 = withActiveVersion(base, f, v1);
    Program p2 = withActiveVersion(base, f, v2);
    return diffPrograms(p1, p2, inputs, fuel);
}

DiffResult checkTransparency(const Program& p, const std::vector<Lit>& inputs, uint64_t fuel,
                             const ForcePolicy& policy) {
    RunResult plain = run(p, inputs, fuel);
    RunResult forced = runForcingDeopt(p, inputs, fuel, policy);
    return compareRuns(std::move(plain), std::move(forced), fuel);
}

std::vector<SweepEntry> sweepTransparency(const Program& p, const std::vector<Lit>& inputs,
                                          uint64_t fuel) {
    std::vector<SweepEntry> out;
    for (auto& [f, v, l] : assumeSites(p)) {
        DiffResult d = checkTransparency(p, inputs, fuel, ForcePolicy::atSite(f, v, l));
        out.push_back({f, v, l, std::move(d)});
    }
    return out;
}

std::vector<std::vector<Lit>> InputPlan::enumerate() const {
    if (!scripts.empty())
        return scripts;
    std::vector<std::vector<Lit>> out;
    if (reads == 0) {
        out.push_back({});
        return out;
    }
    std::vector<size_t> odometer(reads, 0);
    for (;;) {
        std::vector<Lit> script;
        script.reserve(reads);
        for (size_t i = 0; i < reads; ++i)
            script.push_back(pool[odometer[i]]);
        out.push_back(std::move(script));
        size_t k = 0;
        while (k < reads) {
            if (++odometer[k] < pool.size())
                break;
            odometer[k] = 0;
            ++k;
        }
        if (k == reads)
            break;
    }
    return out;
}

std::vector<std::pair<std::vector<Lit>, DiffResult>>
exhaustiveDiff(const Program& p1, const Program& p2, const InputPlan& plan, uint64_t fuel,
               bool collectAll) {
    std::vector<std::pair<std::vector<Lit>, DiffResult>> out;
    for (auto& script : plan.enumerate()) {
        DiffResult d = diffPrograms(p1, p2, script, fuel);
        bool passed = d.passed();
        out.emplace_back(script, std::move(d));
        if (!passed && !collectAll)
            break;
    }
    return out;
}

ValidationReport runValidated(const Program& p, const std::vector<Lit>& inputs, uint64_t fuel) {
    ValidationReport report;
    std::map<std::pair<FunName, VersionName>, ScopeMap> scopes;
    std::map<std::pair<FunName, VersionName>, std::map<Label, AbstractEnv>> facts;
    for (auto& f : p.functions)
        for (auto& v : f.versions) {
            scopes[{f.name, v.name}] = scopeAt(p, f.name, v.name);
            facts[{f.name, v.name}] = constantFacts(p, f.name, v.name);
        }
    RunHooks hooks;
    hooks.onStep = [&](const Configuration& c) {
        if (!report.ok || c.halted)
            return;
        const Label& label = c.label();
        std::string where = c.fun + "." + c.version + "." + label;
        const std::set<VarName>& scope = scopes.at({c.fun, c.version}).at(label);
        if (c.env.domain() != scope) {
            report.ok = false;
            report.violation = "environment domain differs from static scope at " + where;
            return;
        }
        for (auto& [x, fact] : facts.at({c.fun, c.version}).at(label)) {
            const Value* actual = c.env.get(x);
            if (!actual) {
                report.ok = false;
                report.violation = "fact about absent variable '" + x + "' at " + where;
                return;
            }
            Value expected = Value::fromLit(fact.lit);
            bool holds = fact.kind == AbstractValue::Kind::Const ? (*actual == expected)
                                                                 : !(*actual == expected);
            if (!holds) {
                report.ok = false;
                report.violation = std::string(fact.kind == AbstractValue::Kind::Const
                                                   ? "constant"
                                                   : "not-constant") +
                                   " fact about '" + x + "' violated at " + where + " (value " +
                                   printValue(*actual) + ")";
                return;
            }
        }
    };
    RunOptions opts;
    opts.fuel = fuel;
    opts.hooks = &hooks;
    report.result = run(p, inputs, opts);
    return report;
}

} // namespace sourir
