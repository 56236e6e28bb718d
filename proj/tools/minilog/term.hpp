#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

namespace minilog {

// Structure-copying term cells. The arena owns every cell; nothing is freed
// before the engine goes away, which keeps pointers stable during
// backtracking.
struct Term {
    enum class Tag : std::uint8_t { atom, integer, floating, var, compound };

    Tag tag = Tag::atom;
    std::string name;          // atom text / compound functor / var debug name
    long long ival = 0;
    double fval = 0.0;
    std::vector<Term*> args;   // compound arguments
    Term* ref = nullptr;       // var binding, nullptr while unbound
    std::uint64_t serial = 0;  // var identity for standard order
};

class Arena {
public:
    Term* atom(std::string name) {
        Term* t = alloc();
        t->tag = Term::Tag::atom;
        t->name = std::move(name);
        return t;
    }

    Term* integer(long long v) {
        Term* t = alloc();
        t->tag = Term::Tag::integer;
        t->ival = v;
        return t;
    }

    Term* floating(double v) {
        Term* t = alloc();
        t->tag = Term::Tag::floating;
        t->fval = v;
        return t;
    }

    Term* var(std::string name = "_G") {
        Term* t = alloc();
        t->tag = Term::Tag::var;
        t->name = std::move(name);
        t->serial = ++var_counter_;
        return t;
    }

    Term* compound(std::string functor, std::vector<Term*> args) {
        if (args.empty()) return atom(std::move(functor));
        Term* t = alloc();
        t->tag = Term::Tag::compound;
        t->name = std::move(functor);
        t->args = std::move(args);
        return t;
    }

    std::size_t size() const { return cells_.size(); }

private:
    Term* alloc() {
        cells_.emplace_back();
        return &cells_.back();
    }

    std::deque<Term> cells_;
    std::uint64_t var_counter_ = 0;
};

inline Term* deref(Term* t) {
    while (t->tag == Term::Tag::var && t->ref) t = t->ref;
    return t;
}

inline bool is_atom(const Term* t, const char* name) {
    return t->tag == Term::Tag::atom && t->name == name;
}

inline bool is_callable(const Term* t) {
    return t->tag == Term::Tag::atom || t->tag == Term::Tag::compound;
}

inline bool is_nil(const Term* t) { return is_atom(t, "[]"); }

inline bool is_cons(const Term* t) {
    return t->tag == Term::Tag::compound && t->name == "." && t->args.size() == 2;
}

}  // namespace minilog
