#include "probe/prolog.hpp"

#include <atomic>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

namespace probe {

EngineConfig engine_from_env() {
    EngineConfig config;
    if (const char* exe = std::getenv("PROBE_SWIPL"); exe && *exe) config.executable = exe;
    return config;
}

// ---------------------------------------------------------------------------
// Subprocess runner

SubprocessResult run_subprocess(const std::vector<std::string>& argv,
                                const std::filesystem::path& cwd,
                                std::chrono::milliseconds timeout) {
    int out_pipe[2], err_pipe[2];
    if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0)
        throw ProbeError("engine-not-found", "pipe() failed");

    const auto start = std::chrono::steady_clock::now();
    const pid_t pid = fork();
    if (pid < 0) throw ProbeError("engine-not-found", "fork() failed");

    if (pid == 0) {
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(err_pipe[1], STDERR_FILENO);
        close(out_pipe[0]);
        close(out_pipe[1]);
        close(err_pipe[0]);
        close(err_pipe[1]);
        if (!cwd.empty() && chdir(cwd.c_str()) != 0) _exit(127);
        std::vector<char*> args;
        args.reserve(argv.size() + 1);
        for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        execvp(args[0], args.data());
        _exit(127);
    }

    close(out_pipe[1]);
    close(err_pipe[1]);
    fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
    fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

    SubprocessResult result;
    std::string* sinks[2] = {&result.stdout_text, &result.stderr_text};
    struct pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
    int open_fds = 2;
    bool killed = false;

    while (open_fds > 0) {
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start);
        int wait_ms = static_cast<int>((timeout - elapsed).count());
        if (wait_ms <= 0) {
            if (!killed) {
                kill(pid, SIGKILL);
                killed = true;
                result.timed_out = true;
            }
            wait_ms = 100;
        }
        const int rc = poll(fds, 2, wait_ms);
        if (rc < 0 && errno != EINTR) break;
        for (int i = 0; i < 2; ++i) {
            if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP))) continue;
            char buf[4096];
            ssize_t n;
            while ((n = read(fds[i].fd, buf, sizeof buf)) > 0) sinks[i]->append(buf, static_cast<std::size_t>(n));
            if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR)) {
                close(fds[i].fd);
                fds[i].fd = -1;
                --open_fds;
            }
        }
        if (rc == 0 && killed) {
            // Kill delivered; drain whatever is left and stop.
            for (int i = 0; i < 2; ++i) {
                if (fds[i].fd < 0) continue;
                char buf[4096];
                ssize_t n;
                while ((n = read(fds[i].fd, buf, sizeof buf)) > 0)
                    sinks[i]->append(buf, static_cast<std::size_t>(n));
                close(fds[i].fd);
                fds[i].fd = -1;
                --open_fds;
            }
        }
    }
    for (int i = 0; i < 2; ++i)
        if (fds[i].fd >= 0) close(fds[i].fd);

    int status = 0;
    waitpid(pid, &status, 0);
    result.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    if (result.timed_out) {
        result.exit_code = -1;
    } else if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else {
        result.exit_code = -1;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Workspace

namespace {

std::filesystem::path unique_workspace_dir() {
    static std::atomic<std::uint64_t> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    for (int attempt = 0; attempt < 64; ++attempt) {
        auto dir = base / ("probe-ws-" + std::to_string(::getpid()) + "-" +
                           std::to_string(stamp + attempt) + "-" +
                           std::to_string(counter.fetch_add(1)));
        std::error_code ec;
        if (std::filesystem::create_directory(dir, ec)) return dir;
    }
    throw ProbeError("engine-not-found", "cannot create a temporary workspace");
}

}  // namespace

Workspace::Workspace() : dir_(unique_workspace_dir()) {}

Workspace::~Workspace() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
}

void Workspace::write_file(const std::string& name, std::string_view content) const {
    std::ofstream out(dir_ / name, std::ios::binary);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ProbeError("unwritable-path", "cannot write " + (dir_ / name).string());
}

// ---------------------------------------------------------------------------
// Engine drivers

std::string swipl_driver_source() {
    // Inference steps: engine inference-counter delta around the goal.
    // Choice steps: redo total from the profiler's port counts, measured on a
    // second, identical execution.
    return R"PL(probe_load_program :-
    load_files('program', [silent(true)]).

probe_choice_steps(Choices) :-
    profile(ignore(decide_option(user, _)), [top(0)]),
    profile_data(Data),
    get_dict(nodes, Data, Nodes),
    aggregate_all(sum(R), (member(Node, Nodes), get_dict(redo, Node, R)), Choices).

probe_harness_main :-
    catch(probe_load_program, LoadError, (print_message(error, LoadError), halt(2))),
    statistics(inferences, I0),
    (   catch(decide_option(user, Decision), GoalError,
              (print_message(error, GoalError), halt(4)))
    ->  true
    ;   halt(3)
    ),
    statistics(inferences, I1),
    Inferences is I1 - I0,
    (   ground(Decision) -> true ; halt(5) ),
    catch(probe_choice_steps(Choices), ProfileError,
          (print_message(error, ProfileError), halt(6))),
    (   integer(Choices), Choices >= 0 -> true ; halt(6) ),
    format("PROBE_RESULT decision=~w inferences=~w choices=~w~n",
           [Decision, Inferences, Choices]),
    halt(0).
)PL";
}

std::optional<ParsedResultLine> parse_result_line(std::string_view stdout_text) {
    for (const auto& line : split_lines(stdout_text)) {
        const std::string t = trim(line);
        if (t.rfind("PROBE_RESULT ", 0) != 0) continue;
        ParsedResultLine parsed;
        std::istringstream fields(t.substr(13));
        std::string field;
        bool have_decision = false, have_inferences = false, have_choices = false;
        while (fields >> field) {
            const auto eq = field.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = field.substr(0, eq);
            const std::string value = field.substr(eq + 1);
            try {
                if (key == "decision") {
                    parsed.decision = value;
                    have_decision = true;
                } else if (key == "inferences") {
                    parsed.inferences = std::stoll(value);
                    have_inferences = true;
                } else if (key == "choices") {
                    parsed.choices = std::stoll(value);
                    have_choices = true;
                }
            } catch (const std::exception&) {
                return std::nullopt;
            }
        }
        if (have_decision && have_inferences && have_choices) return parsed;
        return std::nullopt;
    }
    return std::nullopt;
}

namespace {

enum class Dialect { swipl, harness_native };

// "--version" output decides how the engine is driven; probed once per path.
Dialect detect_dialect(const std::string& executable) {
    static std::mutex mutex;
    static std::map<std::string, Dialect> cache;
    std::lock_guard<std::mutex> lock(mutex);
    if (auto it = cache.find(executable); it != cache.end()) return it->second;

    const auto probe = run_subprocess({executable, "--version"}, {}, std::chrono::milliseconds(5000));
    if (probe.exit_code != 0)
        throw ProbeError("engine-not-found",
                         executable + " --version failed (exit " + std::to_string(probe.exit_code) + ")");
    const Dialect dialect = contains_ci(probe.stdout_text, "swi-prolog")
                                ? Dialect::swipl
                                : Dialect::harness_native;
    cache[executable] = dialect;
    return dialect;
}

std::string first_diagnostic(const SubprocessResult& run) {
    for (const auto& line : split_lines(run.stderr_text)) {
        const std::string t = trim(line);
        if (!t.empty()) return t;
    }
    for (const auto& line : split_lines(run.stdout_text)) {
        const std::string t = trim(line);
        if (!t.empty() && t.rfind("PROBE_RESULT", 0) != 0) return t;
    }
    return "(no engine diagnostics)";
}

}  // namespace

bool engine_available(const EngineConfig& engine) {
    try {
        detect_dialect(engine.executable);
        return true;
    } catch (const ProbeError&) {
        return false;
    }
}

std::string engine_version(const EngineConfig& engine) {
    const auto run = run_subprocess({engine.executable, "--version"}, {}, std::chrono::milliseconds(5000));
    if (run.exit_code != 0) throw ProbeError("engine-not-found", engine.executable);
    return trim(run.stdout_text.empty() ? run.stderr_text : run.stdout_text);
}

ExecutionTrace execute_program(const PrologBundle& bundle, Variant variant,
                               const EngineConfig& engine) {
    if (engine.timeout.count() <= 0) throw ProbeError("bad-config", "timeout must be positive");
    const Dialect dialect = detect_dialect(engine.executable);

    Workspace ws;
    ws.write_file("axioms.pl", bundle.axioms + "\n");
    ws.write_file("program.pl", bundle.program(variant == Variant::biased) + "\n");

    std::vector<std::string> argv;
    if (dialect == Dialect::swipl) {
        ws.write_file("run.pl", swipl_driver_source());
        argv = {engine.executable, "--quiet", "-g", "probe_harness_main", "-t", "halt(7)", "run.pl"};
    } else {
        argv = {engine.executable, "--quiet", "--harness", "program.pl"};
    }

    const SubprocessResult run = run_subprocess(argv, ws.dir(), engine.timeout);
    if (run.timed_out)
        throw ProbeError("timeout", "engine exceeded " + std::to_string(engine.timeout.count()) + " ms");

    switch (run.exit_code) {
        case 0:
            break;
        case 2:
            throw ProbeError("syntax-error", first_diagnostic(run));
        case 3:
            throw ProbeError("goal-failed", "decide_option(user, Choice) has no solution");
        case 4:
            throw ProbeError("goal-failed", first_diagnostic(run));
        case 5:
            throw ProbeError("nonground-result", "decision term is not ground");
        case 6:
            throw ProbeError("engine-not-found",
                             "engine cannot report choice-point counts: " + first_diagnostic(run));
        case 127:
            throw ProbeError("engine-not-found", engine.executable + " could not be executed");
        default:
            throw ProbeError("goal-failed", "engine exit " + std::to_string(run.exit_code) + ": " +
                                                first_diagnostic(run));
    }

    const auto parsed = parse_result_line(run.stdout_text);
    if (!parsed) throw ProbeError("goal-failed", "engine produced no result line");
    const auto decision = option_from_term(parsed->decision);
    if (!decision)
        throw ProbeError("nonground-result", "decision term '" + parsed->decision +
                                                 "' is not option_A or option_B");
    if (parsed->inferences < 0 || parsed->choices < 0)
        throw ProbeError("goal-failed", "engine reported a negative counter");

    ExecutionTrace trace;
    trace.decision = *decision;
    trace.inference_steps = parsed->inferences;
    trace.choice_steps = parsed->choices;
    trace.wall_time = run.elapsed;
    return trace;
}

EquivalenceCheck verify_pair_equivalence(const ExecutionTrace& unbiased,
                                         const ExecutionTrace& biased) {
    if (unbiased.decision != biased.decision) return {false, "decision-mismatch"};
    if (unbiased.inference_steps != biased.inference_steps) return {false, "step-mismatch"};
    if (unbiased.choice_steps != biased.choice_steps) return {false, "choice-mismatch"};
    return {true, ""};
}

}  // namespace probe
