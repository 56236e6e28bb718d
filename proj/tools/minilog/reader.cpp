#include "reader.hpp"

#include <cctype>
#include <cstdlib>
#include <cstring>

namespace minilog {

namespace {

struct OpDef {
    const char* name;
    int prec;
    const char* type;  // xfx xfy yfx fy fx
};

// Standard-table subset, highest first is irrelevant; lookup by name.
constexpr OpDef kInfixOps[] = {
    {":-", 1200, "xfx"}, {"-->", 1200, "xfx"}, {";", 1100, "xfy"},  {"->", 1050, "xfy"},
    {",", 1000, "xfy"},  {"=", 700, "xfx"},    {"\\=", 700, "xfx"}, {"==", 700, "xfx"},
    {"\\==", 700, "xfx"}, {"@<", 700, "xfx"},  {"@>", 700, "xfx"},  {"@=<", 700, "xfx"},
    {"@>=", 700, "xfx"}, {"is", 700, "xfx"},   {"=:=", 700, "xfx"}, {"=\\=", 700, "xfx"},
    {"<", 700, "xfx"},   {">", 700, "xfx"},    {"=<", 700, "xfx"},  {">=", 700, "xfx"},
    {"=..", 700, "xfx"}, {"+", 500, "yfx"},    {"-", 500, "yfx"},   {"/\\", 500, "yfx"},
    {"\\/", 500, "yfx"}, {"xor", 500, "yfx"},  {"*", 400, "yfx"},   {"/", 400, "yfx"},
    {"//", 400, "yfx"},  {"mod", 400, "yfx"},  {"rem", 400, "yfx"}, {"<<", 400, "yfx"},
    {">>", 400, "yfx"},  {"**", 200, "xfx"},   {"^", 200, "xfy"},
};

constexpr OpDef kPrefixOps[] = {
    {":-", 1200, "fx"}, {"?-", 1200, "fx"}, {"\\+", 900, "fy"},
    {"-", 200, "fy"},   {"+", 200, "fy"},   {"\\", 200, "fy"},
};

const OpDef* infix_op(const std::string& name) {
    for (const auto& op : kInfixOps)
        if (name == op.name) return &op;
    return nullptr;
}

const OpDef* prefix_op(const std::string& name) {
    for (const auto& op : kPrefixOps)
        if (name == op.name) return &op;
    return nullptr;
}

bool symbol_char(char c) {
    return std::strchr("+-*/\\^<>=~:.?@#&$", c) != nullptr;
}

bool alnum_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace

Reader::Reader(std::string_view text, Arena& arena) : text_(text), arena_(arena) { advance(); }

void Reader::fail(const std::string& message) const { throw ReadError(message, line_); }

void Reader::skip_layout() {
    while (pos_ < text_.size()) {
        const char c = text_[pos_];
        if (c == '\n') {
            ++line_;
            ++pos_;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++pos_;
        } else if (c == '%') {
            while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
        } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '*') {
            pos_ += 2;
            while (pos_ + 1 < text_.size() && !(text_[pos_] == '*' && text_[pos_ + 1] == '/')) {
                if (text_[pos_] == '\n') ++line_;
                ++pos_;
            }
            if (pos_ + 1 >= text_.size()) fail("unterminated block comment");
            pos_ += 2;
        } else {
            break;
        }
    }
}

void Reader::advance() { current_ = lex(); }

Reader::Token Reader::lex() {
    skip_layout();
    Token token;
    if (pos_ >= text_.size()) {
        token.kind = Token::Kind::eof;
        return token;
    }
    const char c = text_[pos_];

    // Clause terminator: '.' followed by layout or EOF.
    if (c == '.') {
        const bool at_end = pos_ + 1 >= text_.size();
        const char next = at_end ? ' ' : text_[pos_ + 1];
        if (at_end || std::isspace(static_cast<unsigned char>(next)) || next == '%') {
            ++pos_;
            token.kind = Token::Kind::end;
            return token;
        }
    }

    if (std::isdigit(static_cast<unsigned char>(c))) {
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        bool is_float = false;
        if (pos_ + 1 < text_.size() && text_[pos_] == '.' &&
            std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) {
            is_float = true;
            ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                is_float = true;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            } else {
                pos_ = save;
            }
        }
        const std::string lit(text_.substr(start, pos_ - start));
        if (is_float) {
            token.kind = Token::Kind::floating;
            token.fval = std::strtod(lit.c_str(), nullptr);
        } else {
            token.kind = Token::Kind::integer;
            token.ival = std::strtoll(lit.c_str(), nullptr, 10);
        }
        return token;
    }

    if (c == '_' || std::isupper(static_cast<unsigned char>(c))) {
        std::size_t start = pos_;
        while (pos_ < text_.size() && alnum_char(text_[pos_])) ++pos_;
        token.kind = Token::Kind::variable;
        token.text = std::string(text_.substr(start, pos_ - start));
        return token;
    }

    if (std::islower(static_cast<unsigned char>(c))) {
        std::size_t start = pos_;
        while (pos_ < text_.size() && alnum_char(text_[pos_])) ++pos_;
        token.kind = Token::Kind::atom;
        token.text = std::string(text_.substr(start, pos_ - start));
        token.functor_paren = pos_ < text_.size() && text_[pos_] == '(';
        return token;
    }

    if (c == '\'' || c == '"') {
        const char quote = c;
        ++pos_;
        std::string value;
        while (pos_ < text_.size()) {
            const char d = text_[pos_];
            if (d == quote) {
                if (pos_ + 1 < text_.size() && text_[pos_ + 1] == quote) {
                    value.push_back(quote);
                    pos_ += 2;
                    continue;
                }
                ++pos_;
                token.kind = quote == '\'' ? Token::Kind::atom : Token::Kind::str;
                token.text = value;
                token.functor_paren = pos_ < text_.size() && text_[pos_] == '(';
                return token;
            }
            if (d == '\\' && pos_ + 1 < text_.size()) {
                const char e = text_[pos_ + 1];
                switch (e) {
                    case 'n': value.push_back('\n'); break;
                    case 't': value.push_back('\t'); break;
                    case '\\': value.push_back('\\'); break;
                    case '\'': value.push_back('\''); break;
                    case '"': value.push_back('"'); break;
                    default: value.push_back(e); break;
                }
                pos_ += 2;
                continue;
            }
            if (d == '\n') ++line_;
            value.push_back(d);
            ++pos_;
        }
        fail("unterminated quoted atom");
    }

    if (std::strchr("()[]{},|", c)) {
        ++pos_;
        token.kind = Token::Kind::punct;
        token.text = std::string(1, c);
        return token;
    }

    if (c == '!' || c == ';') {
        ++pos_;
        token.kind = Token::Kind::atom;
        token.text = std::string(1, c);
        token.functor_paren = pos_ < text_.size() && text_[pos_] == '(';
        return token;
    }

    if (symbol_char(c)) {
        std::size_t start = pos_;
        while (pos_ < text_.size() && symbol_char(text_[pos_])) ++pos_;
        token.kind = Token::Kind::atom;
        token.text = std::string(text_.substr(start, pos_ - start));
        token.functor_paren = pos_ < text_.size() && text_[pos_] == '(';
        return token;
    }

    fail(std::string("unexpected character '") + c + "'");
}

std::optional<Term*> Reader::next_clause() {
    if (current_.kind == Token::Kind::eof) return std::nullopt;
    clause_vars_.clear();
    Term* term = parse(1200);
    if (current_.kind != Token::Kind::end) fail("expected '.' at end of clause");
    advance();
    return term;
}

Term* Reader::parse(int max_prec) {
    Term* left = parse_primary(max_prec);
    int left_prec = 0;

    for (;;) {
        std::string op_name;
        if (current_.kind == Token::Kind::atom) {
            op_name = current_.text;
        } else if (current_.kind == Token::Kind::punct && current_.text == ",") {
            op_name = ",";
        } else {
            break;
        }
        const OpDef* op = infix_op(op_name);
        if (!op || op->prec > max_prec) break;
        const std::string type = op->type;
        const int left_max = type == "yfx" ? op->prec : op->prec - 1;
        const int right_max = type == "xfy" ? op->prec : op->prec - 1;
        if (left_prec > left_max) break;
        advance();
        Term* right = parse(right_max);
        left = arena_.compound(op_name == "," ? "," : op_name, {left, right});
        left_prec = op->prec;
    }
    return left;
}

Term* Reader::parse_primary(int max_prec) {
    switch (current_.kind) {
        case Token::Kind::integer: {
            Term* t = arena_.integer(current_.ival);
            advance();
            return t;
        }
        case Token::Kind::floating: {
            Term* t = arena_.floating(current_.fval);
            advance();
            return t;
        }
        case Token::Kind::str: {
            // Double-quoted text is rare in this corpus; treat as an atom.
            Term* t = arena_.atom(current_.text);
            advance();
            return t;
        }
        case Token::Kind::variable: {
            const std::string name = current_.text;
            advance();
            if (name == "_") return arena_.var("_");
            for (auto& [n, v] : clause_vars_)
                if (n == name) return v;
            Term* v = arena_.var(name);
            clause_vars_.emplace_back(name, v);
            return v;
        }
        case Token::Kind::punct: {
            if (current_.text == "(") {
                advance();
                Term* inner = parse(1200);
                if (!(current_.kind == Token::Kind::punct && current_.text == ")"))
                    fail("expected ')'");
                advance();
                return inner;
            }
            if (current_.text == "[") {
                advance();
                return parse_list();
            }
            fail("unexpected '" + current_.text + "'");
        }
        case Token::Kind::atom: {
            const std::string name = current_.text;
            const bool functor = current_.functor_paren;
            advance();
            if (functor) return parse_arglist_compound(name);

            // Prefix operator or plain atom.
            if (const OpDef* op = prefix_op(name); op && op->prec <= max_prec) {
                const bool operand_follows =
                    current_.kind == Token::Kind::integer || current_.kind == Token::Kind::floating ||
                    current_.kind == Token::Kind::variable || current_.kind == Token::Kind::str ||
                    (current_.kind == Token::Kind::atom && !infix_op(current_.text)) ||
                    (current_.kind == Token::Kind::atom && prefix_op(current_.text)) ||
                    (current_.kind == Token::Kind::punct &&
                     (current_.text == "(" || current_.text == "["));
                if (operand_follows) {
                    if (name == "-" && current_.kind == Token::Kind::integer) {
                        Term* t = arena_.integer(-current_.ival);
                        advance();
                        return t;
                    }
                    if (name == "-" && current_.kind == Token::Kind::floating) {
                        Term* t = arena_.floating(-current_.fval);
                        advance();
                        return t;
                    }
                    const int operand_max = std::string(op->type) == "fy" ? op->prec : op->prec - 1;
                    Term* operand = parse(operand_max);
                    return arena_.compound(name, {operand});
                }
            }
            return arena_.atom(name);
        }
        case Token::Kind::end:
        case Token::Kind::eof:
            fail("unexpected end of clause");
    }
    fail("unreachable token state");
}

Term* Reader::parse_arglist_compound(std::string functor) {
    // current_ is '('
    if (!(current_.kind == Token::Kind::punct && current_.text == "(")) fail("expected '('");
    advance();
    std::vector<Term*> args;
    for (;;) {
        args.push_back(parse(999));
        if (current_.kind == Token::Kind::punct && current_.text == ",") {
            advance();
            continue;
        }
        if (current_.kind == Token::Kind::punct && current_.text == ")") {
            advance();
            break;
        }
        fail("expected ',' or ')' in argument list");
    }
    return arena_.compound(std::move(functor), std::move(args));
}

Term* Reader::parse_list() {
    // current_ token is the one after '['
    if (current_.kind == Token::Kind::punct && current_.text == "]") {
        advance();
        return arena_.atom("[]");
    }
    std::vector<Term*> items;
    Term* tail = nullptr;
    for (;;) {
        items.push_back(parse(999));
        if (current_.kind == Token::Kind::punct && current_.text == ",") {
            advance();
            continue;
        }
        if (current_.kind == Token::Kind::punct && current_.text == "|") {
            advance();
            tail = parse(999);
        }
        if (current_.kind == Token::Kind::punct && current_.text == "]") {
            advance();
            break;
        }
        fail("expected ',', '|' or ']' in list");
    }
    Term* list = tail ? tail : arena_.atom("[]");
    for (auto it = items.rbegin(); it != items.rend(); ++it)
        list = arena_.compound(".", {*it, list});
    return list;
}

}  // namespace minilog
