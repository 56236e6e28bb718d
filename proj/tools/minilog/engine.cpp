#include "engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "reader.hpp"

namespace minilog {

namespace {

std::string functor_key(const Term* t) {
    if (t->tag == Term::Tag::atom) return t->name + "/0";
    return t->name + "/" + std::to_string(t->args.size());
}

const char* kKernel = R"PL(
member(X, [X|_]).
member(X, [_|T]) :- member(X, T).
memberchk(X, L) :- member(X, L), !.
append([], L, L).
append([H|T], L, [H|R]) :- append(T, L, R).
select(X, [X|T], T).
select(X, [H|T], [H|R]) :- select(X, T, R).
reverse(L, R) :- reverse_acc(L, [], R).
reverse_acc([], A, A).
reverse_acc([H|T], A, R) :- reverse_acc(T, [H|A], R).
once(G) :- call(G), !.
ignore(G) :- call(G), !.
ignore(_).
)PL";

}  // namespace

Engine::Engine() { consult_text(kKernel, "(kernel)"); }

// ---------------------------------------------------------------------------
// Loading

void Engine::consult_file(const std::filesystem::path& path) {
    std::filesystem::path resolved = path;
    if (resolved.is_relative() && !base_dir_.empty()) resolved = base_dir_ / resolved;
    if (!std::filesystem::exists(resolved)) {
        std::filesystem::path with_ext = resolved;
        with_ext += ".pl";
        if (std::filesystem::exists(with_ext)) resolved = with_ext;
    }
    std::ifstream in(resolved, std::ios::binary);
    if (!in) throw PrologError("existence_error: cannot open " + resolved.string());
    std::stringstream buf;
    buf << in.rdbuf();
    consult_text(buf.str(), resolved.string());
}

void Engine::consult_text(std::string_view text, const std::string& origin) {
    Reader reader(text, arena_);
    for (;;) {
        std::optional<Term*> clause;
        try {
            clause = reader.next_clause();
        } catch (const ReadError& e) {
            throw PrologError("syntax error in " + origin + ": " + e.what());
        }
        if (!clause) break;
        Term* t = deref(*clause);
        if (t->tag == Term::Tag::compound && t->name == ":-" && t->args.size() == 1) {
            run_directive(deref(t->args[0]), origin);
        } else {
            add_clause(t, origin);
        }
    }
}

void Engine::add_clause(Term* term, const std::string& origin) {
    Term* head = term;
    Term* body = nullptr;
    if (term->tag == Term::Tag::compound && term->name == ":-" && term->args.size() == 2) {
        head = deref(term->args[0]);
        body = term->args[1];
    }
    if (!is_callable(head))
        throw PrologError("type_error: clause head is not callable in " + origin);
    database_[functor_key(head)].push_back({head, body});
}

void Engine::run_directive(Term* goal, const std::string& origin) {
    const std::string key = functor_key(goal);
    // Declaration directives are accepted and ignored.
    if (key == "dynamic/1" || key == "discontiguous/1" || key == "multifile/1" ||
        key == "set_prolog_flag/2" || key == "use_module/1" || key == "use_module/2" ||
        key == "style_check/1")
        return;
    if (!solve(goal))
        std::cerr << "Warning: " << origin << ": directive failed: " << term_to_string(goal)
                  << "\n";
}

// ---------------------------------------------------------------------------
// Bindings

void Engine::bind(Term* var, Term* value) {
    var->ref = value;
    trail_.push_back(var);
}

void Engine::undo_to(std::size_t mark) {
    while (trail_.size() > mark) {
        trail_.back()->ref = nullptr;
        trail_.pop_back();
    }
}

bool Engine::unify(Term* a, Term* b) {
    a = deref(a);
    b = deref(b);
    if (a == b) return true;
    if (a->tag == Term::Tag::var) {
        bind(a, b);
        return true;
    }
    if (b->tag == Term::Tag::var) {
        bind(b, a);
        return true;
    }
    if (a->tag != b->tag) return false;
    switch (a->tag) {
        case Term::Tag::atom:
            return a->name == b->name;
        case Term::Tag::integer:
            return a->ival == b->ival;
        case Term::Tag::floating:
            return a->fval == b->fval;
        case Term::Tag::compound: {
            if (a->name != b->name || a->args.size() != b->args.size()) return false;
            for (std::size_t i = 0; i < a->args.size(); ++i)
                if (!unify(a->args[i], b->args[i])) return false;
            return true;
        }
        default:
            return false;
    }
}

Term* Engine::rename(Term* t, std::map<Term*, Term*>& mapping) {
    t = deref(t);
    switch (t->tag) {
        case Term::Tag::atom:
        case Term::Tag::integer:
        case Term::Tag::floating:
            return t;
        case Term::Tag::var: {
            auto it = mapping.find(t);
            if (it != mapping.end()) return it->second;
            Term* fresh = arena_.var(t->name);
            mapping.emplace(t, fresh);
            return fresh;
        }
        case Term::Tag::compound: {
            std::vector<Term*> args;
            args.reserve(t->args.size());
            bool changed = false;
            for (Term* a : t->args) {
                Term* r = rename(a, mapping);
                changed |= (r != a);
                args.push_back(r);
            }
            if (!changed) return t;
            return arena_.compound(t->name, std::move(args));
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// Arithmetic

Engine::Number Engine::eval_arith(Term* t) {
    t = deref(t);
    switch (t->tag) {
        case Term::Tag::integer:
            return {false, t->ival, 0.0};
        case Term::Tag::floating:
            return {true, 0, t->fval};
        case Term::Tag::var:
            throw PrologError("instantiation_error: unbound variable in arithmetic");
        case Term::Tag::atom:
            if (t->name == "pi") return {true, 0, M_PI};
            if (t->name == "e") return {true, 0, M_E};
            throw PrologError("type_error: evaluable expected, got " + t->name);
        case Term::Tag::compound:
            break;
    }

    const auto& name = t->name;
    const std::size_t arity = t->args.size();
    auto promote = [](const Number& a, const Number& b) { return a.is_float || b.is_float; };

    if (arity == 1) {
        const Number a = eval_arith(t->args[0]);
        if (name == "-") return a.is_float ? Number{true, 0, -a.d} : Number{false, -a.i, 0.0};
        if (name == "+") return a;
        if (name == "abs")
            return a.is_float ? Number{true, 0, std::fabs(a.d)} : Number{false, std::llabs(a.i), 0.0};
        if (name == "sign") {
            if (a.is_float) return {true, 0, a.d > 0 ? 1.0 : (a.d < 0 ? -1.0 : 0.0)};
            return {false, a.i > 0 ? 1 : (a.i < 0 ? -1 : 0), 0.0};
        }
        if (name == "float") return {true, 0, a.as_double()};
        if (name == "integer" || name == "truncate")
            return {false, static_cast<long long>(a.as_double()), 0.0};
        if (name == "floor") return {false, static_cast<long long>(std::floor(a.as_double())), 0.0};
        if (name == "ceiling")
            return {false, static_cast<long long>(std::ceil(a.as_double())), 0.0};
        if (name == "sqrt") return {true, 0, std::sqrt(a.as_double())};
        if (name == "log") return {true, 0, std::log(a.as_double())};
        if (name == "exp") return {true, 0, std::exp(a.as_double())};
        throw PrologError("type_error: unknown evaluable " + name + "/1");
    }
    if (arity == 2) {
        const Number a = eval_arith(t->args[0]);
        const Number b = eval_arith(t->args[1]);
        if (name == "+")
            return promote(a, b) ? Number{true, 0, a.as_double() + b.as_double()}
                                 : Number{false, a.i + b.i, 0.0};
        if (name == "-")
            return promote(a, b) ? Number{true, 0, a.as_double() - b.as_double()}
                                 : Number{false, a.i - b.i, 0.0};
        if (name == "*")
            return promote(a, b) ? Number{true, 0, a.as_double() * b.as_double()}
                                 : Number{false, a.i * b.i, 0.0};
        if (name == "/") {
            if (!promote(a, b)) {
                if (b.i == 0) throw PrologError("evaluation_error: zero_divisor");
                if (a.i % b.i == 0) return {false, a.i / b.i, 0.0};
            }
            if (b.as_double() == 0.0) throw PrologError("evaluation_error: zero_divisor");
            return {true, 0, a.as_double() / b.as_double()};
        }
        if (name == "//") {
            if (a.is_float || b.is_float) throw PrologError("type_error: '//' needs integers");
            if (b.i == 0) throw PrologError("evaluation_error: zero_divisor");
            return {false, a.i / b.i, 0.0};
        }
        if (name == "mod") {
            if (a.is_float || b.is_float) throw PrologError("type_error: 'mod' needs integers");
            if (b.i == 0) throw PrologError("evaluation_error: zero_divisor");
            long long m = a.i % b.i;
            if (m != 0 && ((m < 0) != (b.i < 0))) m += b.i;
            return {false, m, 0.0};
        }
        if (name == "rem") {
            if (a.is_float || b.is_float) throw PrologError("type_error: 'rem' needs integers");
            if (b.i == 0) throw PrologError("evaluation_error: zero_divisor");
            return {false, a.i % b.i, 0.0};
        }
        if (name == "min")
            return a.as_double() <= b.as_double() ? a : b;
        if (name == "max")
            return a.as_double() >= b.as_double() ? a : b;
        if (name == "**" || name == "^") {
            const double r = std::pow(a.as_double(), b.as_double());
            if (!a.is_float && !b.is_float && b.i >= 0 && name == "^")
                return {false, static_cast<long long>(std::llround(r)), 0.0};
            return {true, 0, r};
        }
        throw PrologError("type_error: unknown evaluable " + name + "/2");
    }
    throw PrologError("type_error: unknown evaluable " + name);
}

// ---------------------------------------------------------------------------
// Standard order

int Engine::compare_terms(Term* a, Term* b) {
    a = deref(a);
    b = deref(b);
    if (a == b) return 0;
    auto rank = [](const Term* t) {
        switch (t->tag) {
            case Term::Tag::var: return 0;
            case Term::Tag::floating:
            case Term::Tag::integer: return 1;
            case Term::Tag::atom: return 2;
            case Term::Tag::compound: return 3;
        }
        return 4;
    };
    const int ra = rank(a), rb = rank(b);
    if (ra != rb) return ra < rb ? -1 : 1;
    switch (a->tag) {
        case Term::Tag::var:
            return a->serial < b->serial ? -1 : (a->serial > b->serial ? 1 : 0);
        case Term::Tag::integer:
        case Term::Tag::floating: {
            const double da = a->tag == Term::Tag::integer ? static_cast<double>(a->ival) : a->fval;
            const double db = b->tag == Term::Tag::integer ? static_cast<double>(b->ival) : b->fval;
            if (da < db) return -1;
            if (da > db) return 1;
            const bool fa = a->tag == Term::Tag::floating, fb = b->tag == Term::Tag::floating;
            if (fa == fb) return 0;
            return fa ? -1 : 1;  // equal value: float precedes integer
        }
        case Term::Tag::atom:
            return a->name.compare(b->name) < 0 ? -1 : (a->name == b->name ? 0 : 1);
        case Term::Tag::compound: {
            if (a->args.size() != b->args.size())
                return a->args.size() < b->args.size() ? -1 : 1;
            if (int c = a->name.compare(b->name); c != 0) return c < 0 ? -1 : 1;
            for (std::size_t i = 0; i < a->args.size(); ++i)
                if (int c = compare_terms(a->args[i], b->args[i]); c != 0) return c;
            return 0;
        }
    }
    return 0;
}

bool Engine::is_ground(Term* t) {
    t = deref(t);
    if (t->tag == Term::Tag::var) return false;
    if (t->tag == Term::Tag::compound)
        for (Term* a : t->args)
            if (!is_ground(a)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Writer

std::string Engine::term_to_string(Term* t) {
    t = deref(t);
    switch (t->tag) {
        case Term::Tag::atom:
            return t->name;
        case Term::Tag::integer:
            return std::to_string(t->ival);
        case Term::Tag::floating: {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.15g", t->fval);
            std::string s = buf;
            if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
                s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
                s += ".0";
            return s;
        }
        case Term::Tag::var:
            return "_G" + std::to_string(t->serial);
        case Term::Tag::compound:
            break;
    }
    if (is_cons(t)) {
        std::string out = "[";
        Term* node = t;
        bool first = true;
        while (is_cons(node)) {
            if (!first) out += ",";
            out += term_to_string(node->args[0]);
            first = false;
            node = deref(node->args[1]);
        }
        if (!is_nil(node)) {
            out += "|";
            out += term_to_string(node);
        }
        return out + "]";
    }
    std::string out = t->name + "(";
    for (std::size_t i = 0; i < t->args.size(); ++i) {
        if (i) out += ",";
        out += term_to_string(t->args[i]);
    }
    return out + ")";
}

// ---------------------------------------------------------------------------
// Resolution

Engine::GoalNode* Engine::push_goal(Term* goal, std::size_t barrier, GoalNode* next) {
    goal_nodes_.push_back({goal, barrier, next});
    return &goal_nodes_.back();
}

bool Engine::solve(Term* goal) {
    ++solve_depth_;
    GoalNode* goals = push_goal(goal, 0, nullptr);
    bool ok;
    try {
        ok = run(goals, 0);
    } catch (...) {
        --solve_depth_;
        throw;
    }
    --solve_depth_;
    return ok;
}

std::vector<Term*> Engine::find_all(Term* witness, Term* goal) {
    // Drive the search through every solution; the $findall_hit marker
    // records a copy of the witness and then fails over to the next one.
    std::vector<Term*> results;
    const std::size_t mark = trail_.size();
    ++solve_depth_;
    GoalNode* goals = push_goal(goal, 0, push_goal(arena_.atom("$findall_hit"), 0, nullptr));
    auto saved_sink = std::move(findall_sink_);
    findall_sink_ = [&] {
        std::map<Term*, Term*> mapping;
        results.push_back(rename(witness, mapping));
    };
    try {
        run(goals, 0);
    } catch (...) {
        findall_sink_ = std::move(saved_sink);
        undo_to(mark);
        --solve_depth_;
        throw;
    }
    findall_sink_ = std::move(saved_sink);
    undo_to(mark);
    --solve_depth_;
    return results;
}

bool Engine::run(GoalNode* goals, std::size_t cp_floor) {
    std::vector<ChoicePoint> cps;

    auto backtrack = [&](GoalNode*& out_goals) -> bool {
        for (;;) {
            if (cps.size() <= cp_floor) return false;
            ChoicePoint cp = cps.back();
            cps.pop_back();
            ++choices_;
            undo_to(cp.trail_mark);
            switch (cp.kind) {
                case ChoicePoint::Kind::disjunction:
                    out_goals = push_goal(cp.alt_goal, cp.goal_barrier, cp.continuation);
                    return true;
                case ChoicePoint::Kind::between: {
                    if (cp.between_next > cp.between_hi) continue;
                    Term* value = arena_.integer(cp.between_next);
                    if (cp.between_next < cp.between_hi) {
                        ChoicePoint again = cp;
                        again.between_next = cp.between_next + 1;
                        again.trail_mark = trail_.size();
                        cps.push_back(again);
                    }
                    bind(deref(cp.between_var), value);
                    out_goals = cp.continuation;
                    return true;
                }
                case ChoicePoint::Kind::clause: {
                    const auto& clauses = *cp.clauses;
                    ++inferences_;  // redo of the call
                    std::size_t i = cp.next_clause;
                    const std::size_t h = cps.size();
                    while (i < clauses.size()) {
                        const std::size_t mark = trail_.size();
                        std::map<Term*, Term*> mapping;
                        Term* head = rename(clauses[i].head, mapping);
                        if (unify(cp.call_goal, head)) {
                            if (i + 1 < clauses.size()) {
                                ChoicePoint next = cp;
                                next.next_clause = i + 1;
                                next.trail_mark = mark;
                                cps.push_back(next);
                            }
                            GoalNode* rest = cp.continuation;
                            if (clauses[i].body) {
                                Term* body = rename(clauses[i].body, mapping);
                                rest = push_goal(body, h, rest);
                            }
                            out_goals = rest;
                            return true;
                        }
                        undo_to(mark);
                        ++i;
                    }
                    continue;  // no alternative fit; keep backtracking
                }
            }
        }
    };

    for (;;) {
        if (halt_requested_) return false;
        if (!goals) return true;

        GoalNode* node = goals;
        goals = node->next;
        Term* goal = deref(node->goal);
        const std::size_t barrier = node->cut_barrier;

        if (goal->tag == Term::Tag::var)
            throw PrologError("instantiation_error: unbound goal");
        if (goal->tag == Term::Tag::integer || goal->tag == Term::Tag::floating)
            throw PrologError("type_error: callable expected");

        const std::string& name = goal->name;
        const std::size_t arity = goal->tag == Term::Tag::compound ? goal->args.size() : 0;

        // Control constructs (not counted as inferences).
        if (arity == 0 && name == "true") continue;
        if (arity == 0 && (name == "fail" || name == "false")) {
            if (!backtrack(goals)) return false;
            continue;
        }
        if (arity == 2 && name == ",") {
            goals = push_goal(goal->args[0], barrier, push_goal(goal->args[1], barrier, goals));
            continue;
        }
        if (arity == 0 && name == "!") {
            if (cps.size() > std::max(barrier, cp_floor))
                cps.resize(std::max(barrier, cp_floor));
            continue;
        }
        if (arity == 1 && name == "$ite") {
            const auto h = static_cast<std::size_t>(deref(goal->args[0])->ival);
            if (cps.size() > std::max(h, cp_floor)) cps.resize(std::max(h, cp_floor));
            continue;
        }
        if (arity == 0 && name == "$findall_hit") {
            if (findall_sink_) findall_sink_();
            if (!backtrack(goals)) return false;
            continue;
        }
        if (arity == 2 && (name == ";" || name == "->") ) {
            Term* left = goal->args[0];
            Term* right = goal->args[1];
            Term* cond = nullptr;
            Term* then_goal = nullptr;
            Term* else_goal = nullptr;
            if (name == "->") {
                cond = left;
                then_goal = right;
                else_goal = arena_.atom("fail");
            } else {
                Term* l = deref(left);
                if (l->tag == Term::Tag::compound && l->name == "->" && l->args.size() == 2) {
                    cond = l->args[0];
                    then_goal = l->args[1];
                    else_goal = right;
                }
            }
            if (cond) {
                const std::size_t h = cps.size();
                ChoicePoint cp;
                cp.kind = ChoicePoint::Kind::disjunction;
                cp.alt_goal = else_goal;
                cp.goal_barrier = barrier;
                cp.continuation = goals;
                cp.trail_mark = trail_.size();
                cps.push_back(cp);
                Term* commit = arena_.compound("$ite", {arena_.integer(static_cast<long long>(h))});
                goals = push_goal(cond, h + 1,
                                  push_goal(commit, barrier, push_goal(then_goal, barrier, goals)));
            } else {
                ChoicePoint cp;
                cp.kind = ChoicePoint::Kind::disjunction;
                cp.alt_goal = right;
                cp.goal_barrier = barrier;
                cp.continuation = goals;
                cp.trail_mark = trail_.size();
                cps.push_back(cp);
                goals = push_goal(left, barrier, goals);
            }
            continue;
        }
        if (arity == 1 && (name == "\\+" || name == "not")) {
            ++inferences_;
            // \+ G  ==  (G -> fail ; true)
            const std::size_t h = cps.size();
            ChoicePoint cp;
            cp.kind = ChoicePoint::Kind::disjunction;
            cp.alt_goal = arena_.atom("true");
            cp.goal_barrier = barrier;
            cp.continuation = goals;
            cp.trail_mark = trail_.size();
            cps.push_back(cp);
            Term* commit = arena_.compound("$ite", {arena_.integer(static_cast<long long>(h))});
            goals = push_goal(goal->args[0], h + 1,
                              push_goal(commit, barrier, push_goal(arena_.atom("fail"), barrier, goals)));
            continue;
        }

        const Outcome outcome = dispatch_builtin(goal, goals, cps, cp_floor);
        if (outcome == Outcome::proceed) continue;
        if (outcome == Outcome::failed) {
            if (!backtrack(goals)) return false;
            continue;
        }

        // User predicate.
        ++inferences_;
        const std::string key = functor_key(goal);
        auto it = database_.find(key);
        if (it == database_.end())
            throw PrologError("existence_error: unknown procedure " + key);
        const auto& clauses = it->second;
        const std::size_t h = cps.size();
        std::size_t i = 0;
        bool entered = false;
        while (i < clauses.size()) {
            const std::size_t mark = trail_.size();
            std::map<Term*, Term*> mapping;
            Term* head = rename(clauses[i].head, mapping);
            if (unify(goal, head)) {
                if (i + 1 < clauses.size()) {
                    ChoicePoint cp;
                    cp.kind = ChoicePoint::Kind::clause;
                    cp.call_goal = goal;
                    cp.next_clause = i + 1;
                    cp.clauses = &clauses;
                    cp.continuation = goals;
                    cp.trail_mark = mark;
                    cps.push_back(cp);
                }
                if (clauses[i].body) {
                    Term* body = rename(clauses[i].body, mapping);
                    goals = push_goal(body, h, goals);
                }
                entered = true;
                break;
            }
            undo_to(mark);
            ++i;
        }
        if (!entered) {
            if (!backtrack(goals)) return false;
        }
    }
}

// Builtins. Outcome::solved means "not a builtin, try the database".
Engine::Outcome Engine::dispatch_builtin(Term* goal, GoalNode*& goals,
                                         std::vector<ChoicePoint>& cps, std::size_t cp_floor) {
    const std::size_t arity = goal->tag == Term::Tag::compound ? goal->args.size() : 0;
    const std::string& name = goal->name;
    auto A = [&](std::size_t i) { return deref(goal->args[i]); };

    auto succeed_if = [&](bool ok) { return ok ? Outcome::proceed : Outcome::failed; };

    if (arity == 2 && name == "=") {
        ++inferences_;
        return succeed_if(unify(goal->args[0], goal->args[1]));
    }
    if (arity == 2 && name == "\\=") {
        ++inferences_;
        const std::size_t mark = trail_.size();
        const bool same = unify(goal->args[0], goal->args[1]);
        undo_to(mark);
        return succeed_if(!same);
    }
    if (arity == 2 && name == "==") {
        ++inferences_;
        return succeed_if(compare_terms(A(0), A(1)) == 0);
    }
    if (arity == 2 && name == "\\==") {
        ++inferences_;
        return succeed_if(compare_terms(A(0), A(1)) != 0);
    }
    if (arity == 2 && (name == "@<" || name == "@>" || name == "@=<" || name == "@>=")) {
        ++inferences_;
        const int c = compare_terms(A(0), A(1));
        if (name == "@<") return succeed_if(c < 0);
        if (name == "@>") return succeed_if(c > 0);
        if (name == "@=<") return succeed_if(c <= 0);
        return succeed_if(c >= 0);
    }
    if (arity == 2 && name == "is") {
        ++inferences_;
        const Number v = eval_arith(goal->args[1]);
        Term* num = v.is_float ? arena_.floating(v.d) : arena_.integer(v.i);
        return succeed_if(unify(goal->args[0], num));
    }
    if (arity == 2 && (name == "=:=" || name == "=\\=" || name == "<" || name == ">" ||
                       name == "=<" || name == ">=")) {
        ++inferences_;
        const Number a = eval_arith(goal->args[0]);
        const Number b = eval_arith(goal->args[1]);
        bool result;
        if (!a.is_float && !b.is_float) {
            if (name == "=:=") result = a.i == b.i;
            else if (name == "=\\=") result = a.i != b.i;
            else if (name == "<") result = a.i < b.i;
            else if (name == ">") result = a.i > b.i;
            else if (name == "=<") result = a.i <= b.i;
            else result = a.i >= b.i;
        } else {
            const double x = a.as_double(), y = b.as_double();
            if (name == "=:=") result = x == y;
            else if (name == "=\\=") result = x != y;
            else if (name == "<") result = x < y;
            else if (name == ">") result = x > y;
            else if (name == "=<") result = x <= y;
            else result = x >= y;
        }
        return succeed_if(result);
    }
    if (arity == 1 && (name == "var" || name == "nonvar" || name == "atom" || name == "number" ||
                       name == "integer" || name == "float" || name == "atomic" ||
                       name == "compound" || name == "callable" || name == "ground" ||
                       name == "is_list")) {
        ++inferences_;
        Term* t = A(0);
        bool ok = false;
        if (name == "var") ok = t->tag == Term::Tag::var;
        else if (name == "nonvar") ok = t->tag != Term::Tag::var;
        else if (name == "atom") ok = t->tag == Term::Tag::atom;
        else if (name == "number")
            ok = t->tag == Term::Tag::integer || t->tag == Term::Tag::floating;
        else if (name == "integer") ok = t->tag == Term::Tag::integer;
        else if (name == "float") ok = t->tag == Term::Tag::floating;
        else if (name == "atomic") ok = t->tag != Term::Tag::var && t->tag != Term::Tag::compound;
        else if (name == "compound") ok = t->tag == Term::Tag::compound;
        else if (name == "callable") ok = is_callable(t);
        else if (name == "ground") ok = is_ground(t);
        else if (name == "is_list") {
            Term* n = t;
            ok = true;
            while (is_cons(n)) n = deref(n->args[1]);
            ok = is_nil(n);
        }
        return succeed_if(ok);
    }
    if (arity == 1 && name == "call") {
        ++inferences_;
        Term* target = A(0);
        if (!is_callable(target) && target->tag != Term::Tag::var)
            throw PrologError("type_error: callable expected in call/1");
        goals = push_goal(target, cps.size(), goals);
        return Outcome::proceed;
    }
    if (name == "call" && arity >= 2) {
        ++inferences_;
        Term* target = A(0);
        std::vector<Term*> args;
        if (target->tag == Term::Tag::compound) args = target->args;
        for (std::size_t i = 1; i < arity; ++i) args.push_back(goal->args[i]);
        Term* assembled = arena_.compound(target->name, std::move(args));
        goals = push_goal(assembled, cps.size(), goals);
        return Outcome::proceed;
    }
    if (arity == 3 && name == "between") {
        ++inferences_;
        const Number lo = eval_arith(goal->args[0]);
        const Number hi = eval_arith(goal->args[1]);
        if (lo.is_float || hi.is_float) throw PrologError("type_error: between/3 needs integers");
        Term* x = A(2);
        if (x->tag == Term::Tag::integer)
            return succeed_if(x->ival >= lo.i && x->ival <= hi.i);
        if (x->tag != Term::Tag::var) return Outcome::failed;
        if (lo.i > hi.i) return Outcome::failed;
        if (lo.i < hi.i) {
            ChoicePoint cp;
            cp.kind = ChoicePoint::Kind::between;
            cp.between_next = lo.i + 1;
            cp.between_hi = hi.i;
            cp.between_var = x;
            cp.continuation = goals;
            cp.trail_mark = trail_.size();
            cps.push_back(cp);
        }
        bind(x, arena_.integer(lo.i));
        return Outcome::proceed;
    }
    if (arity == 2 && name == "length") {
        ++inferences_;
        Term* list = A(0);
        Term* len = A(1);
        if (len->tag == Term::Tag::var || len->tag == Term::Tag::integer) {
            long long count = 0;
            Term* node = list;
            while (is_cons(node)) {
                ++count;
                node = deref(node->args[1]);
            }
            if (is_nil(node)) return succeed_if(unify(len, arena_.integer(count)));
            if (node->tag == Term::Tag::var && len->tag == Term::Tag::integer) {
                Term* tail = arena_.atom("[]");
                for (long long i = count; i < len->ival; ++i)
                    tail = arena_.compound(".", {arena_.var(), tail});
                if (len->ival < count) return Outcome::failed;
                return succeed_if(unify(node, tail));
            }
            throw PrologError("instantiation_error: length/2 on a partial list");
        }
        return Outcome::failed;
    }
    if (arity == 3 && name == "findall") {
        ++inferences_;
        const auto results = find_all(goal->args[0], goal->args[1]);
        Term* list = arena_.atom("[]");
        for (auto it = results.rbegin(); it != results.rend(); ++it)
            list = arena_.compound(".", {*it, list});
        return succeed_if(unify(goal->args[2], list));
    }
    if (arity == 2 && name == "forall") {
        ++inferences_;
        // forall(C, A)  ==  \+ (C, \+ A)
        Term* inner = arena_.compound(
            ",", {goal->args[0], arena_.compound("\\+", {goal->args[1]})});
        Term* wrapped = arena_.compound("\\+", {inner});
        goals = push_goal(wrapped, cps.size(), goals);
        return Outcome::proceed;
    }
    if ((arity == 2 && name == "sort") || (arity == 2 && name == "msort")) {
        ++inferences_;
        std::vector<Term*> items;
        Term* node = A(0);
        while (is_cons(node)) {
            items.push_back(deref(node->args[0]));
            node = deref(node->args[1]);
        }
        if (!is_nil(node)) throw PrologError("instantiation_error: sort/2 needs a proper list");
        std::stable_sort(items.begin(), items.end(),
                         [](Term* a, Term* b) { return compare_terms(a, b) < 0; });
        if (name == "sort")
            items.erase(std::unique(items.begin(), items.end(),
                                    [](Term* a, Term* b) { return compare_terms(a, b) == 0; }),
                        items.end());
        Term* list = arena_.atom("[]");
        for (auto it = items.rbegin(); it != items.rend(); ++it)
            list = arena_.compound(".", {*it, list});
        return succeed_if(unify(goal->args[1], list));
    }
    if (arity == 3 && name == "functor") {
        ++inferences_;
        Term* t = A(0);
        if (t->tag != Term::Tag::var) {
            Term* fn;
            long long ar = 0;
            if (t->tag == Term::Tag::compound) {
                fn = arena_.atom(t->name);
                ar = static_cast<long long>(t->args.size());
            } else if (t->tag == Term::Tag::atom) {
                fn = arena_.atom(t->name);
            } else {
                fn = t;
            }
            return succeed_if(unify(goal->args[1], fn) && unify(goal->args[2], arena_.integer(ar)));
        }
        Term* fn = A(1);
        Term* ar = A(2);
        if (fn->tag == Term::Tag::atom && ar->tag == Term::Tag::integer) {
            if (ar->ival == 0) return succeed_if(unify(t, fn));
            std::vector<Term*> args;
            for (long long i = 0; i < ar->ival; ++i) args.push_back(arena_.var());
            return succeed_if(unify(t, arena_.compound(fn->name, std::move(args))));
        }
        throw PrologError("instantiation_error: functor/3");
    }
    if (arity == 3 && name == "arg") {
        ++inferences_;
        Term* n = A(0);
        Term* t = A(1);
        if (n->tag != Term::Tag::integer || t->tag != Term::Tag::compound)
            throw PrologError("type_error: arg/3");
        if (n->ival < 1 || n->ival > static_cast<long long>(t->args.size()))
            return Outcome::failed;
        return succeed_if(unify(goal->args[2], t->args[static_cast<std::size_t>(n->ival - 1)]));
    }
    if (arity == 2 && name == "copy_term") {
        ++inferences_;
        std::map<Term*, Term*> mapping;
        return succeed_if(unify(goal->args[1], rename(goal->args[0], mapping)));
    }
    if (arity == 1 && (name == "write" || name == "print" || name == "writeln")) {
        ++inferences_;
        std::cout << term_to_string(A(0));
        if (name == "writeln") std::cout << "\n";
        return Outcome::proceed;
    }
    if (arity == 0 && name == "nl") {
        ++inferences_;
        std::cout << "\n";
        return Outcome::proceed;
    }
    if (arity == 2 && name == "format") {
        ++inferences_;
        Term* fmt = A(0);
        if (fmt->tag != Term::Tag::atom) throw PrologError("type_error: format/2 pattern");
        std::vector<Term*> args;
        Term* node = A(1);
        while (is_cons(node)) {
            args.push_back(node->args[0]);
            node = deref(node->args[1]);
        }
        std::size_t next = 0;
        const std::string& pattern = fmt->name;
        for (std::size_t i = 0; i < pattern.size(); ++i) {
            if (pattern[i] == '~' && i + 1 < pattern.size()) {
                const char d = pattern[++i];
                if (d == 'n') {
                    std::cout << "\n";
                } else if (d == 'w' || d == 'a' || d == 'd' || d == 'q' || d == 'p') {
                    if (next < args.size()) std::cout << term_to_string(args[next++]);
                } else {
                    std::cout << d;
                }
            } else {
                std::cout << pattern[i];
            }
        }
        return Outcome::proceed;
    }
    if (arity <= 1 && name == "halt") {
        halt_requested_ = true;
        halt_code_ = arity == 1 && A(0)->tag == Term::Tag::integer
                         ? static_cast<int>(A(0)->ival)
                         : 0;
        throw HaltRequest{halt_code_};
    }
    if (arity == 1 && (name == "consult" || name == "ensure_loaded")) {
        ++inferences_;
        Term* f = A(0);
        if (f->tag != Term::Tag::atom) throw PrologError("type_error: consult/1 needs an atom");
        consult_file(f->name);
        return Outcome::proceed;
    }
    if (arity == 1 && name == "throw") {
        throw PrologError("unhandled exception: " + term_to_string(A(0)));
    }
    (void)cp_floor;
    return Outcome::solved;  // not a builtin
}

}  // namespace minilog
