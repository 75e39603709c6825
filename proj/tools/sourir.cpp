#include "sourir/equivalence.h"
#include "sourir/fuzz.h"
#include "sourir/interp.h"
#include "sourir/passes.h"
#include "sourir/text.h"
#include "sourir/wellformed.h"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace {

using namespace sourir;

constexpr int kUsageError = 64;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

Program loadProgram(const std::string& path) { return parse(slurp(path)); }

// `@file` or an inline comma list
std::vector<Lit> loadInputs(const std::string& spec) {
    if (!spec.empty() && spec[0] == '@')
        return parseInputs(slurp(spec.substr(1)));
    return parseInputs(spec);
}

std::vector<PassInvocation> loadPipeline(const std::string& spec) {
    if (!spec.empty() && spec[0] == '@')
        return parsePipeline(slurp(spec.substr(1)));
    std::string text = spec;
    std::replace(text.begin(), text.end(), ';', '\n');
    return parsePipeline(text);
}

int requireWellFormed(const Program& p, const std::string& file) {
    auto diags = checkProgram(p);
    if (diags.empty())
        return 0;
    std::cerr << renderDiagnostics(diags, file);
    return 1;
}

int cmdCheck(const std::string& file) {
    Program p = loadProgram(file);
    return requireWellFormed(p, file);
}

int cmdRun(const std::string& file, const std::string& inputsSpec, uint64_t fuel, bool trace) {
    Program p = loadProgram(file);
    if (requireWellFormed(p, file))
        return 1;
    RunResult r = run(p, loadInputs(inputsSpec), fuel);
    std::cout << printTrace(r.trace);
    if (trace)
        std::cout << "-- outcome: " << r.outcomeString() << " steps:" << r.steps << "\n";
    switch (r.outcome) {
    case RunResult::Outcome::Stopped:
        return 0;
    case RunResult::Outcome::RuntimeError:
        if (!trace)
            std::cerr << "-- outcome: " << r.outcomeString() << " steps:" << r.steps << "\n";
        return 2;
    case RunResult::Outcome::FuelExhausted:
        return 3;
    }
    return 2;
}

int cmdOpt(const std::string& file, const std::string& pipelineSpec, const std::string& outPath) {
    Program p = loadProgram(file);
    if (requireWellFormed(p, file))
        return 1;
    auto pipeline = loadPipeline(pipelineSpec);
    auto [optimized, reports] = runPipeline(p, pipeline);
    for (auto& r : reports)
        std::cerr << printReport(r) << "\n";
    std::string text = print(optimized);
    if (outPath.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(outPath);
        out << text;
    }
    return 0;
}

int cmdDiff(const std::vector<std::string>& files, const std::string& fn, const std::string& v1,
            const std::string& v2, const std::string& inputsSpec, const std::string& enumSpec,
            uint64_t fuel) {
    std::vector<std::vector<Lit>> scripts;
    if (!enumSpec.empty()) {
        InputPlan plan;
        std::istringstream in(enumSpec);
        std::string kv;
        while (in >> kv) {
            auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("--enumerate expects pool=.. reads=..");
            std::string key = kv.substr(0, eq);
            std::string value = kv.substr(eq + 1);
            if (key == "pool")
                plan.pool = parseInputs(value);
            else if (key == "reads")
                plan.reads = std::stoul(value);
        }
        scripts = plan.enumerate();
    } else {
        scripts.push_back(loadInputs(inputsSpec));
    }

    auto diffOnce = [&](const std::vector<Lit>& inputs) -> DiffResult {
        if (!fn.empty()) {
            Program p = loadProgram(files.at(0));
            return diffVersions(p, fn, v1, v2, inputs, fuel);
        }
        Program p1 = loadProgram(files.at(0));
        Program p2 = loadProgram(files.at(1));
        return diffPrograms(p1, p2, inputs, fuel);
    };

    bool allPassed = true;
    for (auto& inputs : scripts) {
        DiffResult d = diffOnce(inputs);
        if (scripts.size() > 1)
            std::cout << "inputs [" << printInputs(inputs) << "]: ";
        std::cout << d.render();
        if (!d.passed()) {
            allPassed = false;
            break;
        }
    }
    return allPassed ? 0 : 1;
}

int cmdTransparency(const std::string& file, bool sweep, const std::string& inputsSpec,
                    uint64_t fuel) {
    Program p = loadProgram(file);
    if (requireWellFormed(p, file))
        return 1;
    std::vector<Lit> inputs = loadInputs(inputsSpec);
    if (!sweep) {
        DiffResult d = checkTransparency(p, inputs, fuel);
        std::cout << d.render();
        return d.passed() ? 0 : 1;
    }
    bool allPassed = true;
    for (auto& entry : sweepTransparency(p, inputs, fuel)) {
        bool ok = entry.result.passed();
        std::cout << entry.fun << "." << entry.version << "." << entry.label << ": "
                  << (ok ? "EQUAL" : "NOT EQUAL") << "\n";
        if (!ok) {
            std::cout << entry.result.render();
            allPassed = false;
        }
    }
    return allPassed ? 0 : 1;
}

int cmdFuzz(uint64_t seed, int count, const std::string& cfgPath) {
    GenConfig cfg;
    if (!cfgPath.empty())
        cfg = parseGenConfig(slurp(cfgPath));
    FuzzOptions opts;
    int threads = (int)std::thread::hardware_concurrency();
    auto results = runFuzzBatch(cfg, seed, count, opts, threads);
    int failures = 0, equal = 0, inconclusive = 0;
    for (auto& c : results) {
        equal += c.equal;
        inconclusive += c.inconclusive;
        if (!c.ok) {
            ++failures;
            writeReproducer(c, ".");
            std::cerr << "case " << c.seed << " FAILED: " << c.failure << "\n"
                      << "reproducer written to case-" << c.seed << "/\n";
        }
    }
    std::cout << "fuzz: " << results.size() << " cases, " << equal << " equal diffs, "
              << inconclusive << " inconclusive, " << failures << " failures\n";
    return failures ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sourir: speculative-optimization IR tools"};
    app.require_subcommand(1);

    std::string file, file2, inputsSpec, pipelineSpec, outPath, fn, v1, v2, enumSpec, cfgPath;
    uint64_t fuel = 1000000;
    bool traceFooter = false, sweep = false;
    uint64_t seed = 1;
    int count = 100;

    auto* check = app.add_subcommand("check", "static well-formedness diagnostics");
    check->add_option("file", file)->required();

    auto* runCmd = app.add_subcommand("run", "execute a program and print its trace");
    runCmd->add_option("file", file)->required();
    runCmd->add_option("--inputs", inputsSpec, "@file or inline comma list");
    runCmd->add_option("--fuel", fuel);
    runCmd->add_flag("--trace", traceFooter, "append the outcome footer");

    auto* opt = app.add_subcommand("opt", "apply a pass pipeline");
    opt->add_option("file", file)->required();
    opt->add_option("--pipeline", pipelineSpec, "@file or inline ;-separated")->required();
    opt->add_option("-o", outPath, "output file (default stdout)");

    auto* diff = app.add_subcommand("diff", "differential trace comparison");
    diff->add_option("file", file)->required();
    diff->add_option("file2", file2);
    diff->add_option("--fn", fn, "compare two versions of this function");
    diff->add_option("--v1", v1);
    diff->add_option("--v2", v2);
    diff->add_option("--inputs", inputsSpec);
    diff->add_option("--enumerate", enumSpec, "pool=.. reads=..");
    diff->add_option("--fuel", fuel);

    auto* transparency = app.add_subcommand("transparency", "forced-deoptimization check");
    transparency->add_option("file", file)->required();
    transparency->add_flag("--sweep", sweep, "one forced run per assume site");
    transparency->add_option("--inputs", inputsSpec);
    transparency->add_option("--fuel", fuel);

    auto* fuzz = app.add_subcommand("fuzz", "end-to-end fuzz property");
    fuzz->add_option("--seed", seed)->required();
    fuzz->add_option("--count", count)->required();
    fuzz->add_option("--cfg", cfgPath, "generator config (key=value lines)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e); // --help
        app.exit(e);
        return kUsageError;
    }

    try {
        if (check->parsed())
            return cmdCheck(file);
        if (runCmd->parsed())
            return cmdRun(file, inputsSpec, fuel, traceFooter);
        if (opt->parsed())
            return cmdOpt(file, pipelineSpec, outPath);
        if (diff->parsed()) {
            std::vector<std::string> files{file};
            if (!file2.empty())
                files.push_back(file2);
            if (fn.empty() && files.size() != 2) {
                std::cerr << "diff needs two files or --fn with --v1/--v2\n";
                return kUsageError;
            }
            if (!fn.empty() && (v1.empty() || v2.empty())) {
                std::cerr << "--fn needs --v1 and --v2\n";
                return kUsageError;
            }
            return cmdDiff(files, fn, v1, v2, inputsSpec, enumSpec, fuel);
        }
        if (transparency->parsed())
            return cmdTransparency(file, sweep, inputsSpec, fuel);
        if (fuzz->parsed())
            return cmdFuzz(seed, count, cfgPath);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    } catch (const PassError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kUsageError;
}
