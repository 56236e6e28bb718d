#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "term.hpp"

namespace minilog {

struct ReadError : std::runtime_error {
    ReadError(const std::string& message, int line)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line(line) {}
    int line;
};

/// Reads one clause/directive at a time from Prolog source text with the
/// standard operator table subset.
class Reader {
public:
    Reader(std::string_view text, Arena& arena);

    /// Next term terminated by '. '; nullopt at end of input.
    /// Throws ReadError on malformed input.
    std::optional<Term*> next_clause();

    int line() const { return line_; }

private:
    struct Token {
        enum class Kind {
            atom,
            variable,
            integer,
            floating,
            str,
            punct,  // ( ) [ ] { } , |
            end,    // clause-terminating '.'
            eof,
        };
        Kind kind = Kind::eof;
        std::string text;
        long long ival = 0;
        double fval = 0.0;
        bool functor_paren = false;  // atom immediately followed by '('
    };

    void advance();
    Token lex();
    void skip_layout();

    Term* parse(int max_prec);
    Term* parse_primary(int max_prec);
    Term* parse_arglist_compound(std::string functor);
    Term* parse_list();

    [[noreturn]] void fail(const std::string& message) const;

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    Arena& arena_;
    Token current_;
    std::vector<std::pair<std::string, Term*>> clause_vars_;
};

}  // namespace minilog
