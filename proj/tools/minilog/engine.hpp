#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "term.hpp"

namespace minilog {

struct PrologError : std::runtime_error {
    explicit PrologError(const std::string& message) : std::runtime_error(message) {}
};

/// Raised by halt/0,1; unwinds to main.
struct HaltRequest {
    int code;
};

struct Clause {
    Term* head;
    Term* body;  // nullptr for facts
};

/// SLD resolution over a clause database, with explicit goal and choice-point
/// stacks so deterministic recursion runs in constant engine memory.
///
/// Counters:
///   inferences — resolution visits: one per user-predicate or builtin call,
///                plus one per clause retry on backtracking (control
///                conjunctions and internal markers are free);
///   choices    — choice points explored during backtracking: one per resumed
///                alternative.
class Engine {
public:
    Engine();

    void consult_file(const std::filesystem::path& path);
    void consult_text(std::string_view text, const std::string& origin);

    /// Solves the goal to its first solution. Bindings stay in place on
    /// success so callers can inspect answers.
    bool solve(Term* goal);

    /// Collects instantiations of `witness` for every solution of `goal`.
    std::vector<Term*> find_all(Term* witness, Term* goal);

    Arena& arena() { return arena_; }

    std::uint64_t inferences() const { return inferences_; }
    std::uint64_t choices() const { return choices_; }

    bool halted() const { return halt_requested_; }
    int halt_code() const { return halt_code_; }

    static std::string term_to_string(Term* t);
    static bool is_ground(Term* t);

    /// Directory used to resolve consult/1 targets; defaults to cwd.
    void set_base_dir(std::filesystem::path dir) { base_dir_ = std::move(dir); }

private:
    struct GoalNode {
        Term* goal;
        std::size_t cut_barrier;
        GoalNode* next;
    };

    struct ChoicePoint {
        enum class Kind : std::uint8_t { clause, disjunction, between };
        Kind kind = Kind::clause;
        Term* call_goal = nullptr;    // clause: goal being retried
        std::size_t next_clause = 0;  // clause: next alternative index
        const std::vector<Clause>* clauses = nullptr;
        Term* alt_goal = nullptr;     // disjunction: right branch
        std::size_t goal_barrier = 0;
        GoalNode* continuation = nullptr;
        std::size_t trail_mark = 0;
        long long between_next = 0;   // between: next integer
        long long between_hi = 0;
        Term* between_var = nullptr;
    };

    GoalNode* push_goal(Term* goal, std::size_t barrier, GoalNode* next);

    void bind(Term* var, Term* value);
    void undo_to(std::size_t mark);
    bool unify(Term* a, Term* b);
    Term* rename(Term* t, std::map<Term*, Term*>& mapping);

    struct Number {
        bool is_float = false;
        long long i = 0;
        double d = 0.0;
        double as_double() const { return is_float ? d : static_cast<double>(i); }
    };
    Number eval_arith(Term* t);

    static int compare_terms(Term* a, Term* b);

    void add_clause(Term* term, const std::string& origin);
    void run_directive(Term* goal, const std::string& origin);

    /// Main resolution loop. Returns true when the goal list empties.
    bool run(GoalNode* goals, std::size_t cp_floor);

    enum class Outcome { solved, failed, proceed };
    Outcome dispatch_builtin(Term* goal, GoalNode*& goals, std::vector<ChoicePoint>& cps,
                             std::size_t cp_floor);

    Arena arena_;
    std::map<std::string, std::vector<Clause>> database_;
    std::vector<Term*> trail_;
    std::deque<GoalNode> goal_nodes_;
    std::filesystem::path base_dir_;

    std::uint64_t inferences_ = 0;
    std::uint64_t choices_ = 0;
    bool halt_requested_ = false;
    int halt_code_ = 0;
    int solve_depth_ = 0;
    std::function<void()> findall_sink_;
};

}  // namespace minilog
