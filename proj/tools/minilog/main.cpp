// minilog: a step-counting Prolog-subset engine.
//
// Drop-in execution backend for the benchmark harness on machines without
// SWI-Prolog (point PROBE_SWIPL at this binary). Loads plain fact/rule
// programs, answers decide_option(user, Choice) style goals, and reports
// deterministic inference and choice-point counters over the same
// PROBE_RESULT line and exit-code protocol the SWI driver uses.

#include <cstring>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "engine.hpp"
#include "reader.hpp"

namespace {

constexpr const char* kVersion = "minilog 1.0 (step-counting Prolog subset, probe harness protocol)";

int run_harness(minilog::Engine& engine) {
    using minilog::Term;

    Term* choice = engine.arena().var("Choice");
    Term* goal = engine.arena().compound(
        "decide_option", {engine.arena().atom("user"), choice});

    const auto inferences_before = engine.inferences();
    const auto choices_before = engine.choices();

    bool solved;
    try {
        solved = engine.solve(goal);
    } catch (const minilog::HaltRequest& h) {
        return h.code;
    } catch (const minilog::PrologError& e) {
        std::cerr << "minilog: " << e.what() << "\n";
        return 4;
    }
    if (!solved) return 3;

    Term* decision = minilog::deref(choice);
    if (!minilog::Engine::is_ground(decision) || decision->tag != Term::Tag::atom) return 5;

    std::cout << "PROBE_RESULT decision=" << decision->name
              << " inferences=" << (engine.inferences() - inferences_before)
              << " choices=" << (engine.choices() - choices_before) << "\n";
    return 0;
}

int run_goal(minilog::Engine& engine, const std::string& goal_text) {
    const std::string source = goal_text + " .";
    try {
        minilog::Reader reader(source, engine.arena());
        auto term = reader.next_clause();
        if (!term) {
            std::cerr << "minilog: empty goal\n";
            return 4;
        }
        return engine.solve(*term) ? 0 : 1;
    } catch (const minilog::ReadError& e) {
        std::cerr << "minilog: goal: " << e.what() << "\n";
        return 4;
    } catch (const minilog::HaltRequest& h) {
        return h.code;
    } catch (const minilog::PrologError& e) {
        std::cerr << "minilog: " << e.what() << "\n";
        return 4;
    }
}

}  // namespace

int main(int argc, char** argv) {
    bool harness = false;
    std::string goal_text;
    std::vector<std::string> files;

    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--version") {
            std::cout << kVersion << "\n";
            return 0;
        }
        if (arg == "--quiet" || arg == "-q") continue;
        if (arg == "--harness") {
            harness = true;
            continue;
        }
        if (arg == "-g" || arg == "-t") {
            if (i + 1 >= argc) {
                std::cerr << "minilog: " << arg << " needs an argument\n";
                return 2;
            }
            if (arg == "-g") goal_text = argv[++i];
            else ++i;  // toplevel goal: the harness protocol never reaches it
            continue;
        }
        if (!arg.empty() && arg[0] == '-') {
            std::cerr << "minilog: unknown option " << arg << "\n";
            return 2;
        }
        files.push_back(arg);
    }

    minilog::Engine engine;
    engine.set_base_dir(std::filesystem::current_path());

    for (const auto& file : files) {
        try {
            engine.consult_file(file);
        } catch (const minilog::HaltRequest& h) {
            return h.code;
        } catch (const minilog::PrologError& e) {
            std::cerr << "minilog: " << e.what() << "\n";
            return 2;
        }
    }

    if (harness) return run_harness(engine);
    if (!goal_text.empty()) return run_goal(engine, goal_text);
    if (files.empty()) {
        std::cerr << "usage: minilog [--quiet] [--harness] [-g goal] file.pl...\n";
        return 2;
    }
    return 0;
}
