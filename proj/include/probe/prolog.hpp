#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "probe/corpus.hpp"

namespace probe {

/// External Prolog engine. The executable comes from PROBE_SWIPL (default
/// "swipl"); a bundled fallback engine speaking the same result protocol can
/// be substituted through the same variable.
struct EngineConfig {
    std::string executable = "swipl";
    std::chrono::milliseconds timeout{10000};
};

/// Reads PROBE_SWIPL, keeping the default timeout.
EngineConfig engine_from_env();

/// True when the engine executable can be launched (`--version` succeeds).
bool engine_available(const EngineConfig& engine);
std::string engine_version(const EngineConfig& engine);

enum class Variant { unbiased, biased };

/// Runs the selected program's decide_option(user, Choice) goal in a fresh
/// workspace (axioms.pl + program.pl + driver), one subprocess per execution.
/// Errors: engine-not-found, syntax-error, goal-failed, nonground-result,
/// timeout.
ExecutionTrace execute_program(const PrologBundle& bundle, Variant variant,
                               const EngineConfig& engine);

struct EquivalenceCheck {
    bool passed = false;
    std::string reason;  // "decision-mismatch", "step-mismatch", "choice-mismatch"
};

/// Pass iff decisions are identical ground terms and both step counters match.
EquivalenceCheck verify_pair_equivalence(const ExecutionTrace& unbiased,
                                         const ExecutionTrace& biased);

// --- building blocks exposed for tests ---

struct SubprocessResult {
    int exit_code = -1;
    bool timed_out = false;
    std::string stdout_text;
    std::string stderr_text;
    std::chrono::milliseconds elapsed{0};
};

SubprocessResult run_subprocess(const std::vector<std::string>& argv,
                                const std::filesystem::path& cwd,
                                std::chrono::milliseconds timeout);

/// Temporary execution workspace; removes itself and its contents on scope
/// exit, success or failure.
class Workspace {
public:
    Workspace();
    ~Workspace();
    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;

    const std::filesystem::path& dir() const { return dir_; }
    void write_file(const std::string& name, std::string_view content) const;

private:
    std::filesystem::path dir_;
};

/// The SWI-Prolog measurement driver written into each workspace.
std::string swipl_driver_source();

struct ParsedResultLine {
    std::string decision;
    std::int64_t inferences = 0;
    std::int64_t choices = 0;
};
std::optional<ParsedResultLine> parse_result_line(std::string_view stdout_text);

}  // namespace probe
