#pragma once

#include <pplp/error.hpp>

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace pplp
{

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v)
{
    if (v == 0.0)
        return "0";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

/// Logic term. `Random` terms never come out of the parser: grounding uses them to stand for
/// one continuous random variable (attribute, entity tuple, dimension).
struct Term
{
    enum class Kind
    {
        Symbol,
        Number,
        Variable,
        Compound,
        Random
    };

    Kind kind = Kind::Symbol;
    std::string name;       // symbol text, variable name, functor or attribute predicate
    double value = 0.0;     // number value; dimension for random terms
    std::vector<Term> args; // compound arguments; entity tuple for random terms

    static Term symbol(std::string s) { return {Kind::Symbol, std::move(s), 0.0, {}}; }
    static Term number(double v) { return {Kind::Number, {}, v, {}}; }
    static Term variable(std::string s) { return {Kind::Variable, std::move(s), 0.0, {}}; }
    static Term compound(std::string f, std::vector<Term> a) { return {Kind::Compound, std::move(f), 0.0, std::move(a)}; }
    static Term random(std::string attr, std::vector<Term> entity, std::size_t dim)
    {
        return {Kind::Random, std::move(attr), static_cast<double>(dim), std::move(entity)};
    }

    bool is_variable() const { return kind == Kind::Variable; }
    bool is_number() const { return kind == Kind::Number; }
    bool is_random() const { return kind == Kind::Random; }

    bool is_ground() const
    {
        if (kind == Kind::Variable)
            return false;
        for (const auto& a : args)
            if (!a.is_ground())
                return false;
        return true;
    }

    friend bool operator==(const Term&, const Term&) = default;
};

struct Atom
{
    std::string predicate;
    std::vector<Term> args;

    std::size_t arity() const { return args.size(); }

    bool is_ground() const
    {
        for (const auto& a : args)
            if (!a.is_ground())
                return false;
        return true;
    }

    friend bool operator==(const Atom&, const Atom&) = default;
};

struct Literal
{
    Atom atom;
    bool negated = false;

    friend bool operator==(const Literal&, const Literal&) = default;
};

using Substitution = std::map<std::string, Term>;

inline Term substitute(const Term& t, const Substitution& theta)
{
    if (t.kind == Term::Kind::Variable) {
        auto it = theta.find(t.name);
        return it == theta.end() ? t : it->second;
    }
    if (t.args.empty())
        return t;
    Term r = t;
    for (auto& a : r.args)
        a = substitute(a, theta);
    return r;
}

/// Simultaneous substitution: replacement terms are not rewritten again.
inline Atom substitute(const Atom& a, const Substitution& theta)
{
    Atom r{a.predicate, {}};
    r.args.reserve(a.args.size());
    for (const auto& t : a.args)
        r.args.push_back(substitute(t, theta));
    return r;
}

inline void collect_variables(const Term& t, std::vector<std::string>& out)
{
    if (t.kind == Term::Kind::Variable) {
        for (const auto& v : out)
            if (v == t.name)
                return;
        out.push_back(t.name);
        return;
    }
    for (const auto& a : t.args)
        collect_variables(a, out);
}

inline std::vector<std::string> variables_of(const Atom& a)
{
    std::vector<std::string> out;
    for (const auto& t : a.args)
        collect_variables(t, out);
    return out;
}

/// Builtin comparison predicates on continuous variables.
inline bool is_builtin(const std::string& pred, std::size_t arity)
{
    return ((pred == "below" || pred == "above") && arity == 2) || (pred == "ininterval" && arity == 3);
}

inline bool is_builtin(const Atom& a) { return is_builtin(a.predicate, a.arity()); }

namespace detail
{

inline bool plain_name(const std::string& s)
{
    if (s.empty() || !(s[0] >= 'a' && s[0] <= 'z'))
        return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
            return false;
    return true;
}

inline std::string quote_symbol(const std::string& s)
{
    if (plain_name(s))
        return s;
    std::string r = "'";
    for (char c : s) {
        if (c == '\'' || c == '\\')
            r += '\\';
        r += c;
    }
    return r + "'";
}

} // namespace detail

inline std::string to_string(const Term& t);

inline std::string to_string(const std::string& functor, const std::vector<Term>& args)
{
    if (args.empty())
        return detail::quote_symbol(functor);
    // functors may be capitalised, as in Gaussian(90,10)
    std::string s = detail::plain_name(functor) || (!functor.empty() && std::isupper(static_cast<unsigned char>(functor[0])) &&
                                                    detail::plain_name("x" + functor.substr(1)))
                        ? functor
                        : detail::quote_symbol(functor);
    s += '(';
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (i)
            s += ',';
        s += to_string(args[i]);
    }
    return s + ')';
}

inline std::string to_string(const Term& t)
{
    switch (t.kind) {
    case Term::Kind::Symbol:
        return detail::quote_symbol(t.name);
    case Term::Kind::Number:
        return format_number(t.value);
    case Term::Kind::Variable:
        return t.name;
    case Term::Kind::Compound:
        return to_string(t.name, t.args);
    case Term::Kind::Random: {
        // the name is an attribute key "pred/arity"; show the predicate only
        std::string s = "$" + to_string(t.name.substr(0, t.name.rfind('/')), t.args);
        if (t.value != 0.0)
            s += "." + format_number(t.value);
        return s;
    }
    }
    return "?";
}

inline std::string to_string(const Atom& a) { return to_string(a.predicate, a.args); }

inline std::string to_string(const Literal& l) { return (l.negated ? "\\+ " : "") + to_string(l.atom); }

} // namespace pplp
