#pragma once

#include <pplp/error.hpp>
#include <pplp/model.hpp>
#include <pplp/program.hpp>
#include <pplp/transform.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace pplp
{

struct RuleLearnOptions
{
    double precision = 0.99;     // clause accepted once its precision reaches this
    std::size_t max_body = 4;
    std::size_t max_variables = 4; // head variables included
    std::size_t max_bindings = 100000; // per example and clause
};

struct LearnedClause
{
    Clause clause;
    double precision = 0.0;     // expected precision over all examples
    double positives = 0.0;     // expected positives covered
    double negatives = 0.0;     // expected negatives covered
    std::size_t negations = 0;
    bool best_effort = false;   // stopped below the precision threshold

    std::size_t body_length() const { return clause.body.size(); }
};

struct Hypothesis
{
    ModeDecl target;
    std::vector<LearnedClause> clauses;
    double residual = 0.0;                 // expected positive weight left uncovered
    std::vector<Atom> uncovered;           // positives with no coverage at all
};

/// The four rule statistics: mean precision, mean negations, mean body length, rule count.
struct HypothesisStats
{
    std::size_t rules = 0;
    std::optional<double> precision;
    std::optional<double> negations;
    std::optional<double> predicates;
};

inline HypothesisStats score_hypothesis(const Hypothesis& h)
{
    HypothesisStats s;
    s.rules = h.clauses.size();
    if (h.clauses.empty())
        return s;
    double p = 0, n = 0, b = 0;
    for (const auto& c : h.clauses) {
        p += c.precision;
        n += static_cast<double>(c.negations);
        b += static_cast<double>(c.body_length());
    }
    const double r = static_cast<double>(s.rules);
    s.precision = p / r;
    s.negations = n / r;
    s.predicates = b / r;
    return s;
}

namespace detail
{

/// Background facts indexed by predicate, constants interned.
class FactBase
{
public:
    struct Table
    {
        std::size_t arity = 0;
        std::vector<std::vector<int>> rows;
        std::vector<double> probs;
        std::map<std::vector<int>, double> lookup;
    };

    int intern(const Term& t)
    {
        auto [it, fresh] = ids_.emplace(to_string(t), static_cast<int>(terms_.size()));
        if (fresh)
            terms_.push_back(t);
        return it->second;
    }

    const Term& term(int id) const { return terms_[static_cast<std::size_t>(id)]; }

    void add(const Atom& a, double p)
    {
        auto& t = tables_[predicate_key(a)];
        t.arity = a.arity();
        std::vector<int> row;
        for (const auto& x : a.args)
            row.push_back(intern(x));
        auto it = t.lookup.find(row);
        if (it != t.lookup.end()) {
            // repeated independent facts: noisy-or
            const double q = 1 - (1 - it->second) * (1 - p);
            it->second = q;
            for (std::size_t i = 0; i < t.rows.size(); ++i)
                if (t.rows[i] == row)
                    t.probs[i] = q;
            return;
        }
        t.lookup.emplace(row, p);
        t.rows.push_back(std::move(row));
        t.probs.push_back(p);
    }

    const Table* table(const std::string& key) const
    {
        auto it = tables_.find(key);
        return it == tables_.end() ? nullptr : &it->second;
    }

private:
    std::unordered_map<std::string, int> ids_;
    std::vector<Term> terms_;
    std::map<std::string, Table> tables_;
};

struct Lit
{
    std::size_t mode; // index into bias
    bool negated = false;
    std::vector<int> vars;

    friend bool operator==(const Lit&, const Lit&) = default;
};

struct Body
{
    std::vector<Lit> lits;
    std::vector<std::string> var_types; // head variables first
};

/// Expected coverage of one example: noisy-or over the body's bindings of the product of fact
/// probabilities. Exact for deterministic background.
class Coverage
{
public:
    Coverage(const FactBase& fb, const std::vector<ModeDecl>& bias, std::size_t max_bindings)
        : fb_(fb), bias_(bias), max_bindings_(max_bindings)
    {
        for (const auto& m : bias)
            tables_.push_back(fb.table(m.key()));
    }

    double operator()(const Body& body, const std::vector<int>& head) const
    {
        std::vector<int> binding(body.var_types.size(), -1);
        for (std::size_t i = 0; i < head.size(); ++i)
            binding[i] = head[i];
        double miss = 1.0;
        std::size_t count = 0;
        walk(body, 0, binding, 1.0, miss, count);
        return 1.0 - miss;
    }

private:
    void walk(const Body& body, std::size_t k, std::vector<int>& binding, double prod, double& miss,
              std::size_t& count) const
    {
        if (prod <= 0.0 || miss <= 0.0 || count >= max_bindings_)
            return;
        if (k == body.lits.size()) {
            miss *= 1.0 - prod;
            ++count;
            return;
        }
        const Lit& l = body.lits[k];
        const auto* t = tables_[l.mode];
        if (l.negated) {
            double p = 0.0;
            if (t) {
                std::vector<int> row;
                for (int v : l.vars)
                    row.push_back(binding[static_cast<std::size_t>(v)]);
                auto it = t->lookup.find(row);
                if (it != t->lookup.end())
                    p = it->second;
            }
            walk(body, k + 1, binding, prod * (1.0 - p), miss, count);
            return;
        }
        if (!t)
            return;
        bool all_bound = true;
        for (int v : l.vars)
            all_bound = all_bound && binding[static_cast<std::size_t>(v)] >= 0;
        if (all_bound) {
            std::vector<int> row;
            for (int v : l.vars)
                row.push_back(binding[static_cast<std::size_t>(v)]);
            auto it = t->lookup.find(row);
            if (it != t->lookup.end())
                walk(body, k + 1, binding, prod * it->second, miss, count);
            return;
        }
        for (std::size_t r = 0; r < t->rows.size(); ++r) {
            const auto& row = t->rows[r];
            std::vector<std::size_t> set;
            bool ok = true;
            for (std::size_t i = 0; i < row.size() && ok; ++i) {
                int& b = binding[static_cast<std::size_t>(l.vars[i])];
                if (b < 0) {
                    b = row[i];
                    set.push_back(static_cast<std::size_t>(l.vars[i]));
                } else {
                    ok = b == row[i];
                }
            }
            if (ok)
                walk(body, k + 1, binding, prod * t->probs[r], miss, count);
            for (auto v : set)
                binding[v] = -1;
        }
    }

    const FactBase& fb_;
    const std::vector<ModeDecl>& bias_;
    std::vector<const FactBase::Table*> tables_;
    std::size_t max_bindings_;
};

inline std::string variable_name(std::size_t i)
{
    if (i < 26)
        return std::string(1, static_cast<char>('A' + i));
    return "V" + std::to_string(i);
}

inline Clause to_clause(const ModeDecl& target, const std::vector<ModeDecl>& bias, const Body& body)
{
    Clause c;
    c.head.predicate = target.predicate;
    for (std::size_t i = 0; i < target.types.size(); ++i)
        c.head.args.push_back(Term::variable(variable_name(i)));
    for (const auto& l : body.lits) {
        Atom a{bias[l.mode].predicate, {}};
        for (int v : l.vars)
            a.args.push_back(Term::variable(variable_name(static_cast<std::size_t>(v))));
        c.body.push_back({std::move(a), l.negated});
    }
    return c;
}

/// Candidate literals in bias order: positives may introduce new variables, negations may not.
inline std::vector<Lit> candidates(const Body& body, const std::vector<ModeDecl>& bias, std::size_t max_variables)
{
    std::vector<Lit> out;
    const int nvars = static_cast<int>(body.var_types.size());
    for (bool neg : {false, true}) {
        for (std::size_t m = 0; m < bias.size(); ++m) {
            const auto& types = bias[m].types;
            // options per argument: existing variables of the right type, then one fresh variable
            std::vector<std::vector<int>> options(types.size());
            for (std::size_t i = 0; i < types.size(); ++i) {
                for (int v = 0; v < nvars; ++v)
                    if (body.var_types[static_cast<std::size_t>(v)] == types[i])
                        options[i].push_back(v);
                if (!neg)
                    options[i].push_back(-1 - static_cast<int>(i)); // fresh
            }
            std::vector<std::size_t> idx(types.size(), 0);
            bool done = false;
            for (const auto& o : options)
                done = done || o.empty();
            while (!done) {
                Lit l{m, neg, {}};
                std::size_t fresh = 0;
                bool uses_old = false;
                for (std::size_t i = 0; i < types.size(); ++i) {
                    int v = options[i][idx[i]];
                    if (v < 0) {
                        v = nvars + static_cast<int>(fresh++);
                    } else {
                        uses_old = true;
                    }
                    l.vars.push_back(v);
                }
                const bool linked = uses_old || types.empty() || nvars == 0;
                const bool fits = static_cast<std::size_t>(nvars) + fresh <= max_variables;
                const bool repeated = std::find(body.lits.begin(), body.lits.end(), l) != body.lits.end();
                Lit flipped = l;
                flipped.negated = !neg;
                const bool contradicts = std::find(body.lits.begin(), body.lits.end(), flipped) != body.lits.end();
                if (linked && fits && !repeated && !contradicts)
                    out.push_back(std::move(l));
                std::size_t i = 0;
                while (i < idx.size() && ++idx[i] == options[i].size())
                    idx[i++] = 0;
                done = i == idx.size();
            }
        }
    }
    return out;
}

inline Body extend(const Body& b, const Lit& l, const std::vector<ModeDecl>& bias)
{
    Body r = b;
    for (std::size_t i = 0; i < l.vars.size(); ++i)
        if (static_cast<std::size_t>(l.vars[i]) >= r.var_types.size())
            r.var_types.push_back(bias[l.mode].types[i]);
    r.lits.push_back(l);
    return r;
}

} // namespace detail

/// Greedy covering with FOIL gain on expected counts. Each clause grows one literal at a time
/// until its precision on the remaining positives reaches the threshold or no literal gains;
/// it is kept only if it raises covered positives minus covered negatives of the hypothesis.
inline Hypothesis induce(const LearningTask& task, const RuleLearnOptions& opt = {})
{
    if (task.positives.empty())
        throw ContractError("learning needs at least one positive example");
    const std::string tkey = task.target.key();
    std::vector<ModeDecl> bias;
    for (const auto& m : task.bias)
        if (m.key() != tkey) // no recursion on the target
            bias.push_back(m);
    if (bias.empty())
        throw ContractError("the bias declares no body predicates");

    detail::FactBase fb;
    for (const auto& f : task.background)
        fb.add(f.atom, f.probability);
    auto rows = [&](const std::vector<Atom>& xs) {
        std::vector<std::vector<int>> out;
        for (const auto& a : xs) {
            if (a.arity() != task.target.types.size())
                throw ContractError("example " + to_string(a) + " does not match target " + tkey);
            std::vector<int> r;
            for (const auto& t : a.args)
                r.push_back(fb.intern(t));
            out.push_back(std::move(r));
        }
        return out;
    };
    const auto pos = rows(task.positives);
    const auto neg = rows(task.negatives);
    const detail::Coverage cover(fb, bias, opt.max_bindings);

    Hypothesis h;
    h.target = task.target;
    std::vector<double> residual(pos.size(), 1.0);  // P(positive not yet covered)
    std::vector<double> neg_miss(neg.size(), 1.0);  // P(negative not yet covered)
    auto global = [&](const std::vector<double>& r, const std::vector<double>& nm) {
        double s = 0;
        for (double x : r)
            s += 1 - x;
        for (double x : nm)
            s -= 1 - x;
        return s;
    };

    while (true) {
        double left = 0;
        for (double r : residual)
            left += r;
        if (left < 1e-9)
            break;

        detail::Body body;
        body.var_types = task.target.types;
        std::vector<double> pc(pos.size(), 1.0), nc(neg.size(), 1.0);
        auto counts = [&](const std::vector<double>& p, const std::vector<double>& n) {
            double a = 0, b = 0;
            for (std::size_t i = 0; i < p.size(); ++i)
                a += residual[i] * p[i];
            for (double x : n)
                b += x;
            return std::pair{a, b};
        };
        auto [p0, n0] = counts(pc, nc);
        while (body.lits.size() < opt.max_body && (body.lits.empty() || p0 / (p0 + n0) < opt.precision)) {
            double best_gain = 1e-12;
            std::optional<detail::Body> best;
            std::vector<double> best_pc, best_nc;
            auto consider = [&](detail::Body next) {
                std::vector<double> p1v(pos.size(), 0.0), n1v(neg.size(), 0.0);
                for (std::size_t i = 0; i < pos.size(); ++i)
                    if (pc[i] > 0 && residual[i] > 0)
                        p1v[i] = cover(next, pos[i]);
                const auto p1 = counts(p1v, {}).first;
                if (!(p1 > 0))
                    return;
                for (std::size_t i = 0; i < neg.size(); ++i)
                    if (nc[i] > 0)
                        n1v[i] = cover(next, neg[i]);
                double n1 = 0;
                for (double x : n1v)
                    n1 += x;
                const double gain = p1 * (std::log2(p1 / (p1 + n1)) - std::log2(p0 / (p0 + n0)));
                if (gain > best_gain) {
                    best_gain = gain;
                    best = std::move(next);
                    best_pc = std::move(p1v);
                    best_nc = std::move(n1v);
                }
            };
            const auto singles = detail::candidates(body, bias, opt.max_variables);
            for (const auto& l : singles)
                consider(detail::extend(body, l, bias));
            // a literal that only introduces variables gains nothing by itself; look one step ahead.
            // Pairs come after all single literals so a tie keeps the shorter body.
            for (const auto& l : singles) {
                const auto next = detail::extend(body, l, bias);
                const std::size_t old_vars = body.var_types.size();
                if (next.var_types.size() == old_vars || body.lits.size() + 2 > opt.max_body)
                    continue;
                for (const auto& l2 : detail::candidates(next, bias, opt.max_variables)) {
                    bool uses_new = false;
                    for (int v : l2.vars)
                        uses_new = uses_new || static_cast<std::size_t>(v) >= old_vars;
                    if (uses_new)
                        consider(detail::extend(next, l2, bias));
                }
            }
            if (!best)
                break;
            body = std::move(*best);
            pc = std::move(best_pc);
            nc = std::move(best_nc);
            std::tie(p0, n0) = counts(pc, nc);
        }
        if (body.lits.empty())
            break;

        // full coverage of this clause on every example, for acceptance and statistics
        std::vector<double> pall(pos.size()), nall(neg.size());
        for (std::size_t i = 0; i < pos.size(); ++i)
            pall[i] = cover(body, pos[i]);
        for (std::size_t i = 0; i < neg.size(); ++i)
            nall[i] = cover(body, neg[i]);
        std::vector<double> r2 = residual, nm2 = neg_miss;
        for (std::size_t i = 0; i < pos.size(); ++i)
            r2[i] *= 1 - pall[i];
        for (std::size_t i = 0; i < neg.size(); ++i)
            nm2[i] *= 1 - nall[i];
        if (!(global(r2, nm2) > global(residual, neg_miss) + 1e-12))
            break;

        LearnedClause lc;
        lc.clause = detail::to_clause(task.target, bias, body);
        for (double x : pall)
            lc.positives += x;
        for (double x : nall)
            lc.negatives += x;
        lc.precision = lc.positives / (lc.positives + lc.negatives);
        for (const auto& l : body.lits)
            lc.negations += l.negated ? 1 : 0;
        lc.best_effort = p0 / (p0 + n0) < opt.precision;
        h.clauses.push_back(std::move(lc));
        residual = std::move(r2);
        neg_miss = std::move(nm2);
    }

    for (std::size_t i = 0; i < pos.size(); ++i) {
        h.residual += residual[i];
        if (residual[i] >= 1.0)
            h.uncovered.push_back(task.positives[i]);
    }
    return h;
}

/// The learned clauses as a program.
inline Program to_program(const Hypothesis& h)
{
    Program p;
    for (const auto& c : h.clauses)
        p.add(c.clause);
    return p;
}

} // namespace pplp
