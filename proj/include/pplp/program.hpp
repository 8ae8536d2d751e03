#pragma once

#include <pplp/error.hpp>
#include <pplp/multivariate.hpp>
#include <pplp/polynomial.hpp>
#include <pplp/term.hpp>

#include <charconv>
#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pplp
{

/// p :: atom
struct ProbFact
{
    double probability = 1.0;
    Atom atom;

    friend bool operator==(const ProbFact&, const ProbFact&) = default;
};

/// atom.  (always true; must be ground)
struct Fact
{
    Atom atom;

    friend bool operator==(const Fact&, const Fact&) = default;
};

/// polyexpr :: atom  -- one piece of a continuous density. `variables` lists the polynomial's
/// variables in order of first appearance in the atom; one variable gives a univariate
/// Polynomial, more give a MultivariatePolynomial over them.
struct ContinuousFact
{
    std::vector<std::string> variables;
    std::variant<Polynomial, MultivariatePolynomial> weight;
    Atom atom;

    std::size_t dimension() const { return variables.size(); }

    friend bool operator==(const ContinuousFact&, const ContinuousFact&) = default;
};

/// (V, Distribution(args)) :: atom  -- Hybrid ProbLog style; read and printed, never evaluated.
struct DistributionFact
{
    std::string variable;
    Term distribution;
    Atom atom;

    friend bool operator==(const DistributionFact&, const DistributionFact&) = default;
};

struct Clause
{
    Atom head;
    std::vector<Literal> body;

    friend bool operator==(const Clause&, const Clause&) = default;
};

struct Query
{
    Atom atom;

    friend bool operator==(const Query&, const Query&) = default;
};

struct Evidence
{
    Atom atom;
    bool value = true;

    friend bool operator==(const Evidence&, const Evidence&) = default;
};

using Statement = std::variant<ProbFact, Fact, ContinuousFact, DistributionFact, Clause, Query, Evidence>;

struct SourcePos
{
    std::size_t line = 0;
    std::size_t column = 0;
};

/// Statements in source order. Positions are kept for diagnostics and ignored by ==.
struct Program
{
    std::vector<Statement> statements;
    std::vector<SourcePos> positions;

    void add(Statement s, SourcePos pos = {})
    {
        statements.push_back(std::move(s));
        positions.push_back(pos);
    }

    SourcePos position(std::size_t i) const { return i < positions.size() ? positions[i] : SourcePos{}; }

    template <class T>
    std::vector<T> all() const
    {
        std::vector<T> out;
        for (const auto& s : statements)
            if (const T* p = std::get_if<T>(&s))
                out.push_back(*p);
        return out;
    }

    friend bool operator==(const Program& a, const Program& b) { return a.statements == b.statements; }
};

// ---------------------------------------------------------------------------------------------
// lexer

namespace detail
{

struct Token
{
    enum class Kind
    {
        Name,
        Var,
        Number,
        Quoted,
        Punct,
        End
    };
    Kind kind = Kind::End;
    std::string text;
    double number = 0.0;
    std::size_t line = 1, column = 1;
};

inline std::vector<Token> tokenize(std::string_view src)
{
    std::vector<Token> out;
    std::size_t i = 0, line = 1, col = 1;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
    auto is_ident = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };

    while (i < src.size()) {
        const char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        if (c == '%') {
            while (i < src.size() && src[i] != '\n')
                advance(1);
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
            const std::size_t l0 = line, c0 = col;
            advance(2);
            while (i + 1 < src.size() && !(src[i] == '*' && src[i + 1] == '/'))
                advance(1);
            if (i + 1 >= src.size())
                throw ParseError("unterminated block comment", l0, c0);
            advance(2);
            continue;
        }
        Token t;
        t.line = line;
        t.column = col;
        if (is_digit(c)) {
            std::size_t j = i;
            while (j < src.size() && is_digit(src[j]))
                ++j;
            if (j + 1 < src.size() && src[j] == '.' && is_digit(src[j + 1])) {
                ++j;
                while (j < src.size() && is_digit(src[j]))
                    ++j;
            }
            if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < src.size() && (src[k] == '+' || src[k] == '-'))
                    ++k;
                if (k < src.size() && is_digit(src[k])) {
                    while (k < src.size() && is_digit(src[k]))
                        ++k;
                    j = k;
                }
            }
            t.kind = Token::Kind::Number;
            t.text = std::string(src.substr(i, j - i));
            const auto r = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
            if (r.ec != std::errc())
                throw ParseError("number out of range: " + t.text, line, col);
            advance(j - i);
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < src.size() && is_ident(src[j]))
                ++j;
            t.text = std::string(src.substr(i, j - i));
            t.kind = (std::isupper(static_cast<unsigned char>(c)) || c == '_') ? Token::Kind::Var : Token::Kind::Name;
            advance(j - i);
        } else if (c == '\'') {
            std::string s;
            std::size_t j = i + 1;
            for (;; ++j) {
                if (j >= src.size())
                    throw ParseError("unterminated quoted atom", line, col);
                if (src[j] == '\\' && j + 1 < src.size()) {
                    s += src[++j];
                    continue;
                }
                if (src[j] == '\'')
                    break;
                s += src[j];
            }
            t.kind = Token::Kind::Quoted;
            t.text = s;
            advance(j + 1 - i);
        } else {
            static const char* multi[] = {"::", ":-", "\\+"};
            t.kind = Token::Kind::Punct;
            for (const char* m : multi) {
                if (src.substr(i, 2) == m) {
                    t.text = m;
                    break;
                }
            }
            if (t.text.empty()) {
                if (std::string_view("(),.+-*^/").find(c) == std::string_view::npos)
                    throw ParseError(std::string("unexpected character '") + c + "'", line, col);
                t.text = std::string(1, c);
            }
            advance(t.text.size());
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.line = line;
    end.column = col;
    out.push_back(end);
    return out;
}

// arithmetic over numbers and variables, evaluated into polynomials once the variables are known
struct Expr
{
    enum class Op
    {
        Num,
        Var,
        Shifted, // (V - c): a variable re-anchored at c
        Add,
        Sub,
        Mul,
        Div,
        Neg,
        Pow
    };
    Op op = Op::Num;
    double value = 0.0;
    std::string name;
    std::vector<Expr> kids;
    std::size_t line = 0, column = 0;
};

inline void expr_variables(const Expr& e, std::vector<std::string>& out)
{
    if (e.op == Expr::Op::Var || e.op == Expr::Op::Shifted) {
        for (const auto& v : out)
            if (v == e.name)
                return;
        out.push_back(e.name);
    }
    for (const auto& k : e.kids)
        expr_variables(k, out);
}

// A constant operand adopts the other operand's origin, so (V - c) forms stay anchored at c.
inline Polynomial anchored(const Polynomial& a, const Polynomial& b)
{
    if (a.coefficients().size() <= 1 && (b.coefficients().size() > 1 || b.origin() != 0.0))
        return Polynomial({a.coefficient(0)}, b.origin());
    return a;
}

inline Polynomial eval_univariate(const Expr& e)
{
    using Op = Expr::Op;
    switch (e.op) {
    case Op::Num:
        return Polynomial({e.value});
    case Op::Var:
        return Polynomial({0.0, 1.0});
    case Op::Shifted:
        return Polynomial({0.0, 1.0}, e.value);
    case Op::Neg:
        return -eval_univariate(e.kids[0]);
    case Op::Pow:
        return pow(eval_univariate(e.kids[0]), static_cast<unsigned>(e.value));
    case Op::Div: {
        const Polynomial d = eval_univariate(e.kids[1]);
        if (d.order() > 0 || d.coefficient(0) == 0.0)
            throw ParseError("division only by a non-zero constant", e.line, e.column);
        return eval_univariate(e.kids[0]).scaled(1.0 / d.coefficient(0));
    }
    default: {
        Polynomial a = eval_univariate(e.kids[0]);
        Polynomial b = eval_univariate(e.kids[1]);
        a = anchored(a, b);
        const ArithOp op = e.op == Op::Add ? ArithOp::add : e.op == Op::Sub ? ArithOp::sub : ArithOp::mul;
        return poly_arith(a, b, op);
    }
    }
}

inline MultivariatePolynomial eval_multivariate(const Expr& e, const std::vector<std::string>& vars)
{
    using Op = Expr::Op;
    const std::size_t dim = vars.size();
    auto index = [&](const std::string& v) {
        for (std::size_t j = 0; j < dim; ++j)
            if (vars[j] == v)
                return j;
        throw ParseError("variable " + v + " does not occur in the fact's atom", e.line, e.column);
    };
    switch (e.op) {
    case Op::Num:
        return MultivariatePolynomial::constant(dim, e.value);
    case Op::Var:
        return MultivariatePolynomial::variable(dim, index(e.name));
    case Op::Shifted:
        return MultivariatePolynomial::variable(dim, index(e.name)) - MultivariatePolynomial::constant(dim, e.value);
    case Op::Neg:
        return eval_multivariate(e.kids[0], vars).scaled(-1.0);
    case Op::Pow:
        return pow(eval_multivariate(e.kids[0], vars), static_cast<unsigned>(e.value));
    case Op::Div: {
        const auto d = eval_multivariate(e.kids[1], vars);
        if (d.total_degree() > 0 || d.is_zero())
            throw ParseError("division only by a non-zero constant", e.line, e.column);
        return eval_multivariate(e.kids[0], vars).scaled(1.0 / d.terms().begin()->second);
    }
    case Op::Add:
        return eval_multivariate(e.kids[0], vars) + eval_multivariate(e.kids[1], vars);
    case Op::Sub:
        return eval_multivariate(e.kids[0], vars) - eval_multivariate(e.kids[1], vars);
    case Op::Mul:
        return eval_multivariate(e.kids[0], vars) * eval_multivariate(e.kids[1], vars);
    }
    return MultivariatePolynomial(dim);
}

class Parser
{
public:
    explicit Parser(std::string_view src) : toks_(tokenize(src)) {}

    Program parse_program()
    {
        Program prog;
        while (peek().kind != Token::Kind::End) {
            anon_ = 0;
            const Token& first = peek();
            const SourcePos pos{first.line, first.column};
            prog.add(statement(), pos);
            expect(".");
        }
        return prog;
    }

private:
    std::vector<Token> toks_;
    std::size_t at_ = 0;
    int anon_ = 0;

    const Token& peek(std::size_t k = 0) const { return toks_[std::min(at_ + k, toks_.size() - 1)]; }
    const Token& next() { return toks_[std::min(at_++, toks_.size() - 1)]; }

    bool is(std::string_view punct, std::size_t k = 0) const
    {
        return peek(k).kind == Token::Kind::Punct && peek(k).text == punct;
    }

    [[noreturn]] void fail(const std::string& msg, const Token& t) const
    {
        const std::string got = t.kind == Token::Kind::End ? "end of input" : "'" + t.text + "'";
        throw ParseError(msg + ", found " + got, t.line, t.column);
    }

    void expect(std::string_view punct)
    {
        if (!is(punct))
            fail("expected '" + std::string(punct) + "'", peek());
        next();
    }

    // does '::' occur before the statement's closing '.' (outside parentheses)?
    bool weighted_statement() const
    {
        int depth = 0;
        for (std::size_t k = at_; k < toks_.size(); ++k) {
            const Token& t = toks_[k];
            if (t.kind == Token::Kind::End)
                return false;
            if (t.kind != Token::Kind::Punct)
                continue;
            if (t.text == "(")
                ++depth;
            else if (t.text == ")")
                --depth;
            else if (depth == 0 && t.text == ".")
                return false;
            else if (depth == 0 && t.text == "::")
                return true;
        }
        return false;
    }

    Statement statement()
    {
        if (weighted_statement())
            return weighted();
        if (peek().kind == Token::Kind::Name && is("(", 1) && (peek().text == "query" || peek().text == "evidence")) {
            const bool query = peek().text == "query";
            next();
            next();
            if (query) {
                Query q{atom()};
                expect(")");
                return q;
            }
            Evidence e;
            if (is("\\+")) {
                next();
                e.value = false;
            }
            e.atom = atom();
            if (is(",")) {
                next();
                const Token& v = next();
                if (!e.value || v.kind != Token::Kind::Name || (v.text != "true" && v.text != "false"))
                    fail("expected 'true' or 'false'", v);
                e.value = v.text == "true";
            }
            expect(")");
            return e;
        }
        Atom head = atom();
        if (is(":-")) {
            next();
            Clause c{std::move(head), {}};
            c.body.push_back(literal());
            while (is(",")) {
                next();
                c.body.push_back(literal());
            }
            return c;
        }
        if (!head.is_ground())
            throw SemanticError(position_text(peek()) + "fact " + to_string(head) + " is not ground");
        return Fact{std::move(head)};
    }

    static std::string position_text(const Token& t)
    {
        return std::to_string(t.line) + ":" + std::to_string(t.column) + ": ";
    }

    Statement weighted()
    {
        const Token& start = peek();
        // (V, Dist(...)) :: atom
        if (is("(") && peek(1).kind == Token::Kind::Var && is(",", 2)) {
            next();
            DistributionFact d;
            d.variable = next().text;
            next();
            d.distribution = term();
            expect(")");
            expect("::");
            d.atom = atom();
            return d;
        }
        Expr w = expr();
        expect("::");
        Atom a = atom();
        std::vector<std::string> used;
        expr_variables(w, used);
        if (used.empty()) {
            const double p = eval_univariate(w).coefficient(0);
            if (!(p >= 0.0 && p <= 1.0))
                throw SemanticError(position_text(start) + "probability " + format_number(p) + " of " +
                                    to_string(a) + " is outside [0, 1]");
            return ProbFact{p, std::move(a)};
        }
        ContinuousFact f;
        for (const auto& v : variables_of(a))
            for (const auto& u : used)
                if (u == v)
                    f.variables.push_back(v);
        for (const auto& u : used) {
            bool found = false;
            for (const auto& v : f.variables)
                found = found || u == v;
            if (!found)
                throw ParseError("weight variable " + u + " does not occur in " + to_string(a), start.line,
                                 start.column);
        }
        if (f.variables.size() == 1)
            f.weight = eval_univariate(w);
        else
            f.weight = eval_multivariate(w, f.variables);
        f.atom = std::move(a);
        return f;
    }

    Literal literal()
    {
        Literal l;
        if (is("\\+")) {
            next();
            l.negated = true;
        }
        l.atom = atom();
        return l;
    }

    Atom atom()
    {
        const Token& t = next();
        if (t.kind != Token::Kind::Name && t.kind != Token::Kind::Quoted)
            fail("expected an atom", t);
        Atom a{t.text, {}};
        if (is("(")) {
            next();
            a.args.push_back(term());
            while (is(",")) {
                next();
                a.args.push_back(term());
            }
            expect(")");
        }
        return a;
    }

    Term term()
    {
        const Token& t = next();
        switch (t.kind) {
        case Token::Kind::Number:
            return Term::number(t.number);
        case Token::Kind::Quoted:
            return Term::symbol(t.text);
        case Token::Kind::Name: {
            if (!is("("))
                return Term::symbol(t.text);
            [[fallthrough]];
        }
        case Token::Kind::Var: {
            if (t.kind == Token::Kind::Var && !is("(")) {
                if (t.text == "_")
                    return Term::variable("_" + std::to_string(anon_++));
                return Term::variable(t.text);
            }
            next();
            std::vector<Term> args{term()};
            while (is(",")) {
                next();
                args.push_back(term());
            }
            expect(")");
            return Term::compound(t.text, std::move(args));
        }
        case Token::Kind::Punct:
            if ((t.text == "-" || t.text == "+") && peek().kind == Token::Kind::Number) {
                const double v = next().number;
                return Term::number(t.text == "-" ? -v : v);
            }
            [[fallthrough]];
        default:
            fail("expected a term", t);
        }
    }

    Expr make(Expr::Op op, std::vector<Expr> kids, const Token& at)
    {
        Expr e;
        e.op = op;
        e.kids = std::move(kids);
        e.line = at.line;
        e.column = at.column;
        return e;
    }

    Expr expr()
    {
        Expr lhs = product();
        while (is("+") || is("-")) {
            const Token& op = next();
            Expr rhs = product();
            lhs = make(op.text == "+" ? Expr::Op::Add : Expr::Op::Sub, {std::move(lhs), std::move(rhs)}, op);
        }
        return lhs;
    }

    Expr product()
    {
        Expr lhs = unary();
        for (;;) {
            if (is("*") || is("/")) {
                const Token& op = next();
                Expr rhs = unary();
                lhs = make(op.text == "*" ? Expr::Op::Mul : Expr::Op::Div, {std::move(lhs), std::move(rhs)}, op);
            } else if (peek().kind == Token::Kind::Var || is("(")) {
                // juxtaposition: "0.0005 I"
                const Token& at = peek();
                Expr rhs = unary();
                lhs = make(Expr::Op::Mul, {std::move(lhs), std::move(rhs)}, at);
            } else {
                return lhs;
            }
        }
    }

    Expr unary()
    {
        if (is("-")) {
            const Token& op = next();
            return make(Expr::Op::Neg, {unary()}, op);
        }
        if (is("+")) {
            next();
            return unary();
        }
        return power();
    }

    Expr power()
    {
        Expr base = primary();
        if (is("^")) {
            const Token& op = next();
            const Token& n = next();
            if (n.kind != Token::Kind::Number || n.number != std::floor(n.number) || n.number < 0 || n.number > 64)
                fail("expected a small non-negative integer exponent", n);
            Expr e = make(Expr::Op::Pow, {std::move(base)}, op);
            e.value = n.number;
            return e;
        }
        return base;
    }

    Expr primary()
    {
        const Token& t = next();
        if (t.kind == Token::Kind::Number) {
            Expr e = make(Expr::Op::Num, {}, t);
            e.value = t.number;
            return e;
        }
        if (t.kind == Token::Kind::Var) {
            Expr e = make(Expr::Op::Var, {}, t);
            e.name = t.text;
            return e;
        }
        if (t.kind == Token::Kind::Punct && t.text == "(") {
            // (V - c) and (V + c) keep their anchor
            if (peek().kind == Token::Kind::Var && (is("-", 1) || is("+", 1)) &&
                peek(2).kind == Token::Kind::Number && is(")", 3)) {
                Expr e = make(Expr::Op::Shifted, {}, t);
                e.name = next().text;
                const bool minus = next().text == "-";
                const double c = next().number;
                next();
                e.value = minus ? c : -c;
                return e;
            }
            Expr e = expr();
            expect(")");
            return e;
        }
        fail("expected a number, variable or '('", t);
    }
};

} // namespace detail

/// Reads program text. Syntax errors carry line and column; a probability outside [0, 1] or a
/// non-ground fact is a SemanticError. Density checks happen when a program is loaded.
inline Program parse(std::string_view text) { return detail::Parser(text).parse_program(); }

// ---------------------------------------------------------------------------------------------
// printer

namespace detail
{

inline std::string monomial(const std::string& var, double origin, std::size_t j)
{
    std::string base;
    if (origin == 0.0)
        base = var;
    else if (origin > 0.0)
        base = "(" + var + " - " + format_number(origin) + ")";
    else
        base = "(" + var + " + " + format_number(-origin) + ")";
    return j == 1 ? base : base + "^" + std::to_string(j);
}

inline void append_term(std::string& out, double c, const std::string& mono, bool first)
{
    if (first) {
        out += format_number(c);
    } else {
        out += c < 0 ? " - " : " + ";
        out += format_number(std::abs(c));
    }
    if (!mono.empty())
        out += "*" + mono;
}

} // namespace detail

inline std::string to_string(const Polynomial& p, const std::string& var)
{
    std::string out;
    bool first = true;
    for (std::size_t j = 0; j < p.coefficients().size(); ++j) {
        const double c = p.coefficients()[j];
        if (c == 0.0)
            continue;
        detail::append_term(out, c, j == 0 ? std::string() : detail::monomial(var, p.origin(), j), first);
        first = false;
    }
    if (first)
        out = "0";
    if (p.coefficients().size() <= 1) // keep the variable visible so the weight reads back as a polynomial
        out += " + 0*" + detail::monomial(var, p.origin(), 1);
    return out;
}

inline std::string to_string(const MultivariatePolynomial& p, const std::vector<std::string>& vars)
{
    std::string out;
    bool first = true;
    for (const auto& [e, c] : p.terms()) {
        std::string mono;
        for (std::size_t j = 0; j < e.size(); ++j) {
            if (e[j] == 0)
                continue;
            if (!mono.empty())
                mono += "*";
            mono += vars[j];
            if (e[j] > 1)
                mono += "^" + std::to_string(e[j]);
        }
        detail::append_term(out, c, mono, first);
        first = false;
    }
    if (first)
        out = "0";
    for (std::size_t j = 0; j < vars.size(); ++j) {
        bool seen = false;
        for (const auto& [e, c] : p.terms())
            seen = seen || e[j] > 0;
        if (!seen)
            out += " + 0*" + vars[j];
    }
    return out;
}

inline std::string to_string(const Statement& s)
{
    struct Visitor
    {
        std::string operator()(const ProbFact& f) const { return format_number(f.probability) + " :: " + to_string(f.atom); }
        std::string operator()(const Fact& f) const { return to_string(f.atom); }
        std::string operator()(const ContinuousFact& f) const
        {
            std::string w;
            if (const auto* u = std::get_if<Polynomial>(&f.weight))
                w = to_string(*u, f.variables.front());
            else
                w = to_string(std::get<MultivariatePolynomial>(f.weight), f.variables);
            return w + " :: " + to_string(f.atom);
        }
        std::string operator()(const DistributionFact& f) const
        {
            return "(" + f.variable + ", " + to_string(f.distribution) + ") :: " + to_string(f.atom);
        }
        std::string operator()(const Clause& c) const
        {
            std::string s = to_string(c.head) + " :- ";
            for (std::size_t i = 0; i < c.body.size(); ++i) {
                if (i)
                    s += ", ";
                s += to_string(c.body[i]);
            }
            return s;
        }
        std::string operator()(const Query& q) const { return "query(" + to_string(q.atom) + ")"; }
        std::string operator()(const Evidence& e) const
        {
            return "evidence(" + to_string(e.atom) + (e.value ? "" : ", false") + ")";
        }
    };
    return std::visit(Visitor{}, s);
}

/// One statement per line; parse(print(p)) == p.
inline std::string print(const Program& p)
{
    std::string out;
    for (const auto& s : p.statements)
        out += to_string(s) + ".\n";
    return out;
}

} // namespace pplp
