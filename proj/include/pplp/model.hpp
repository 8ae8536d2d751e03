#pragma once

#include <pplp/error.hpp>
#include <pplp/multivariate.hpp>
#include <pplp/polynomial.hpp>
#include <pplp/program.hpp>
#include <pplp/term.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace pplp
{

inline std::string predicate_key(const std::string& name, std::size_t arity) { return name + "/" + std::to_string(arity); }
inline std::string predicate_key(const Atom& a) { return predicate_key(a.predicate, a.arity()); }

/// One guarded piece of an attribute density.
struct PieceInfo
{
    std::string predicate;     // piece predicate, e.g. int_low/1
    std::size_t statement = 0; // index of the continuous fact
    std::size_t guard = 0;     // index of the guard clause
    HyperCube cube;            // guard region in attribute dimensions
    double mass = 0.0;
};

/// Density of one continuous attribute predicate, shared by all its entity instances.
struct AttributeDensity
{
    std::string predicate;              // key name/arity
    std::string name;
    std::size_t arity = 0;
    std::vector<std::size_t> continuous; // argument positions carrying the random variable, one per dimension
    std::vector<PieceInfo> pieces;       // sorted by region
    PiecewisePolynomial univariate;      // dimension 1
    MultivariatePP multivariate;         // dimension > 1

    std::size_t dimension() const { return continuous.size(); }

    bool is_continuous_position(std::size_t i) const
    {
        return std::find(continuous.begin(), continuous.end(), i) != continuous.end();
    }

    double mass(const HyperCube& box) const
    {
        if (dimension() == 1)
            return integrate_piecewise(univariate, box.bounds[0].lo, box.bounds[0].hi);
        return integrate_box(multivariate, box);
    }

    /// Breakpoints of the density along dimension d.
    std::vector<double> breakpoints(std::size_t d) const
    {
        std::vector<double> b;
        if (dimension() == 1) {
            b.assign(univariate.cutpoints().begin(), univariate.cutpoints().end());
        } else {
            for (const auto& p : multivariate.pieces()) {
                b.push_back(p.cube.bounds[d].lo);
                b.push_back(p.cube.bounds[d].hi);
            }
            std::sort(b.begin(), b.end());
            b.erase(std::unique(b.begin(), b.end()), b.end());
        }
        return b;
    }
};

/// A program whose densities, guards and negation structure have been checked.
struct HybridProgram
{
    Program program;
    std::map<std::string, AttributeDensity> attributes; // by predicate key
    std::map<std::string, std::string> piece_attribute;  // piece predicate key -> attribute key
    std::map<std::string, std::size_t> stratum;          // predicate key -> evaluation order (SCC index)

    const AttributeDensity* attribute(const std::string& key) const
    {
        auto it = attributes.find(key);
        return it == attributes.end() ? nullptr : &it->second;
    }
};

struct LoadOptions
{
    double mass_tolerance = 1e-6;
    double negativity_tolerance = 1e-9;
};

namespace detail
{

inline std::string where(const Program& p, std::size_t i)
{
    const auto pos = p.position(i);
    if (pos.line == 0)
        return "statement " + std::to_string(i + 1) + ": ";
    return std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": ";
}

/// Interval of a builtin literal on its first argument.
inline Interval builtin_range(const Atom& b)
{
    auto num = [&](std::size_t i) {
        if (!b.args[i].is_number())
            throw SemanticError("builtin " + to_string(b) + " needs numeric bounds");
        return b.args[i].value;
    };
    if (b.predicate == "below")
        return {-infinity, num(1)};
    if (b.predicate == "above")
        return {num(1), infinity};
    const double lo = num(1), hi = num(2);
    if (std::isnan(lo) || std::isnan(hi))
        throw ContractError("comparison constant is NaN in " + to_string(b));
    return {lo, hi};
}

struct GuardView
{
    Atom attribute;
    std::vector<std::size_t> positions; // per fact variable
    HyperCube cube;
};

inline GuardView read_guard(const Program& prog, std::size_t fact_index, std::size_t guard_index)
{
    const auto& f = std::get<ContinuousFact>(prog.statements[fact_index]);
    const auto& g = std::get<Clause>(prog.statements[guard_index]);
    const std::string at = where(prog, guard_index);

    // fact variable -> guard head variable, by position
    std::map<std::string, std::string> rename;
    for (std::size_t i = 0; i < f.atom.args.size(); ++i) {
        const Term& a = f.atom.args[i];
        const Term& h = g.head.args[i];
        if (a.is_variable() && h.is_variable())
            rename[a.name] = h.name;
    }

    GuardView v;
    std::size_t attributes = 0;
    for (const auto& lit : g.body) {
        if (lit.negated)
            throw SemanticError(at + "guard of " + to_string(g.head) + " may not contain negation");
        if (!is_builtin(lit.atom)) {
            v.attribute = lit.atom;
            ++attributes;
        }
    }
    if (attributes != 1)
        throw SemanticError(at + "guard of " + to_string(g.head) + " must name exactly one attribute atom");

    std::vector<std::string> guard_vars;
    for (const auto& var : f.variables) {
        auto it = rename.find(var);
        if (it == rename.end())
            throw SemanticError(at + "weight variable " + var + " of " + to_string(f.atom) +
                                " is not an argument of the guard head");
        std::size_t pos = v.attribute.args.size();
        for (std::size_t i = 0; i < v.attribute.args.size(); ++i)
            if (v.attribute.args[i].is_variable() && v.attribute.args[i].name == it->second)
                pos = i;
        if (pos == v.attribute.args.size())
            throw SemanticError(at + "variable " + it->second + " does not occur in attribute atom " +
                                to_string(v.attribute));
        v.positions.push_back(pos);
        guard_vars.push_back(it->second);
    }

    v.cube.bounds.assign(f.variables.size(), Interval{-infinity, infinity});
    for (const auto& lit : g.body) {
        if (!is_builtin(lit.atom))
            continue;
        const Term& x = lit.atom.args[0];
        std::size_t d = guard_vars.size();
        for (std::size_t j = 0; j < guard_vars.size(); ++j)
            if (x.is_variable() && x.name == guard_vars[j])
                d = j;
        if (d == guard_vars.size())
            throw SemanticError(at + "builtin " + to_string(lit.atom) + " does not constrain a weight variable");
        const Interval r = builtin_range(lit.atom);
        v.cube.bounds[d].lo = std::max(v.cube.bounds[d].lo, r.lo);
        v.cube.bounds[d].hi = std::min(v.cube.bounds[d].hi, r.hi);
    }
    for (std::size_t d = 0; d < v.cube.bounds.size(); ++d) {
        const auto& b = v.cube.bounds[d];
        if (!std::isfinite(b.lo) || !std::isfinite(b.hi))
            throw UnboundedPiece(at + "piece " + to_string(g.head) + " is unbounded in " + guard_vars[d] +
                                "; bound it with ininterval/2 or both below/2 and above/2");
        if (!(b.lo < b.hi))
            throw SemanticError(at + "piece " + to_string(g.head) + " has an empty region");
    }
    return v;
}

inline MultivariatePolynomial permute(const MultivariatePolynomial& p, const std::vector<std::size_t>& to)
{
    MultivariatePolynomial r(p.dimension());
    for (const auto& [e, c] : p.terms()) {
        MultivariatePolynomial::Exponents x(e.size());
        for (std::size_t j = 0; j < e.size(); ++j)
            x[to[j]] = e[j];
        r.add_term(std::move(x), c);
    }
    return r;
}

inline void check_negativity(const std::string& what, const std::function<double(std::span<const double>)>& f,
                             const HyperCube& cube, double tol)
{
    const std::size_t d = cube.dimension();
    const std::size_t per = d == 1 ? 65 : d == 2 ? 17 : 7;
    std::size_t total = 1;
    for (std::size_t j = 0; j < d; ++j)
        total *= per;
    std::vector<double> x(d);
    double lowest = infinity, peak = 0.0;
    for (std::size_t k = 0; k < total; ++k) {
        std::size_t r = k;
        for (std::size_t j = 0; j < d; ++j) {
            const auto& b = cube.bounds[j];
            x[j] = b.lo + (b.hi - b.lo) * static_cast<double>(r % per) / static_cast<double>(per - 1);
            r /= per;
        }
        const double v = f(x);
        lowest = std::min(lowest, v);
        peak = std::max(peak, std::abs(v));
    }
    if (lowest < -tol * std::max(1.0, peak))
        throw SemanticError(what + " is negative (minimum " + format_number(lowest) + ")");
}

} // namespace detail

/// Checks a parsed program and assembles the attribute densities from guarded continuous facts.
inline HybridProgram load_program(Program prog, const LoadOptions& opt = {})
{
    using detail::where;
    HybridProgram hp;

    // defined predicates and guard lookup
    std::set<std::string> defined;
    std::map<std::string, std::vector<std::size_t>> clauses_by_head;
    std::map<std::string, std::size_t> continuous_by_pred;
    for (std::size_t i = 0; i < prog.statements.size(); ++i) {
        const auto& s = prog.statements[i];
        if (const auto* c = std::get_if<Clause>(&s)) {
            if (is_builtin(c->head))
                throw SemanticError(where(prog, i) + "builtin " + c->head.predicate + " cannot be redefined");
            defined.insert(predicate_key(c->head));
            clauses_by_head[predicate_key(c->head)].push_back(i);
        } else if (const auto* f = std::get_if<ProbFact>(&s)) {
            defined.insert(predicate_key(f->atom));
        } else if (const auto* f = std::get_if<Fact>(&s)) {
            defined.insert(predicate_key(f->atom));
        } else if (const auto* f = std::get_if<ContinuousFact>(&s)) {
            const std::string key = predicate_key(f->atom);
            if (!continuous_by_pred.emplace(key, i).second)
                throw SemanticError(where(prog, i) + "duplicate density for " + key);
            for (const auto& a : f->atom.args)
                if (!a.is_variable())
                    throw SemanticError(where(prog, i) + "continuous fact " + to_string(f->atom) +
                                        " must have variable arguments");
        } else if (const auto* f = std::get_if<DistributionFact>(&s)) {
            throw SemanticError(where(prog, i) + "distribution " + to_string(f->distribution) + " for " +
                                to_string(f->atom) + " is not a piecewise polynomial; learn a density first");
        }
    }

    // assemble attribute densities
    struct Raw
    {
        std::size_t fact, guard;
        detail::GuardView view;
    };
    std::map<std::string, std::vector<Raw>> by_attribute;
    for (const auto& [key, fi] : continuous_by_pred) {
        auto it = clauses_by_head.find(key);
        if (it == clauses_by_head.end())
            throw SemanticError(where(prog, fi) + "continuous fact for " + key +
                                " has no guard clause linking it to an attribute");
        if (it->second.size() != 1)
            throw SemanticError(where(prog, fi) + "piece " + key + " must have exactly one guard clause, found " +
                                std::to_string(it->second.size()));
        Raw r{fi, it->second.front(), detail::read_guard(prog, fi, it->second.front())};
        by_attribute[predicate_key(r.view.attribute)].push_back(std::move(r));
    }

    for (auto& [akey, raws] : by_attribute) {
        if (defined.count(akey))
            throw SemanticError("attribute " + akey + " has a density and is also defined by facts or clauses");
        AttributeDensity ad;
        ad.predicate = akey;
        ad.name = raws.front().view.attribute.predicate;
        ad.arity = raws.front().view.attribute.arity();
        ad.continuous = raws.front().view.positions;
        std::sort(ad.continuous.begin(), ad.continuous.end());
        const std::size_t dim = ad.continuous.size();

        std::vector<MultivariatePP::Piece> mpieces;
        std::vector<std::pair<PieceInfo, Polynomial>> upieces;
        double mass = 0.0;
        for (auto& r : raws) {
            auto sorted = r.view.positions;
            std::sort(sorted.begin(), sorted.end());
            if (sorted != ad.continuous)
                throw SemanticError(where(prog, r.guard) + "pieces of " + akey +
                                    " disagree on which arguments are continuous");
            // dimension order follows argument position
            std::vector<std::size_t> to(dim);
            for (std::size_t j = 0; j < dim; ++j)
                to[j] = static_cast<std::size_t>(
                    std::find(ad.continuous.begin(), ad.continuous.end(), r.view.positions[j]) - ad.continuous.begin());
            HyperCube cube;
            cube.bounds.resize(dim);
            for (std::size_t j = 0; j < dim; ++j)
                cube.bounds[to[j]] = r.view.cube.bounds[j];

            const auto& f = std::get<ContinuousFact>(prog.statements[r.fact]);
            PieceInfo info{predicate_key(f.atom), r.fact, r.guard, cube, 0.0};
            const std::string what = "density piece " + info.predicate + " of " + akey;
            if (dim == 1) {
                const auto& p = std::get<Polynomial>(f.weight);
                info.mass = integrate_poly(p, cube.bounds[0].lo, cube.bounds[0].hi);
                detail::check_negativity(where(prog, r.fact) + what, [&](std::span<const double> x) { return p(x[0]); },
                                         cube, opt.negativity_tolerance);
                upieces.emplace_back(info, p);
            } else {
                const auto p = detail::permute(std::get<MultivariatePolynomial>(f.weight), to);
                info.mass = integrate(p, cube);
                detail::check_negativity(where(prog, r.fact) + what, [&](std::span<const double> x) { return p(x); },
                                         cube, opt.negativity_tolerance);
                mpieces.push_back({cube, p});
            }
            mass += info.mass;
            ad.pieces.push_back(info);
            hp.piece_attribute[info.predicate] = akey;
        }

        if (dim == 1) {
            std::sort(upieces.begin(), upieces.end(),
                      [](const auto& a, const auto& b) { return a.first.cube.bounds[0].lo < b.first.cube.bounds[0].lo; });
            std::vector<double> cuts;
            std::vector<Polynomial> polys;
            for (std::size_t i = 0; i < upieces.size(); ++i) {
                const auto& iv = upieces[i].first.cube.bounds[0];
                if (!cuts.empty() && iv.lo < cuts.back())
                    throw SemanticError("pieces " + upieces[i - 1].first.predicate + " and " + upieces[i].first.predicate +
                                        " of " + akey + " overlap (duplicate density)");
                if (cuts.empty()) {
                    cuts.push_back(iv.lo);
                } else if (iv.lo > cuts.back()) {
                    polys.push_back(Polynomial({0.0})); // gap between guarded pieces
                    cuts.push_back(iv.lo);
                }
                polys.push_back(upieces[i].second);
                cuts.push_back(iv.hi);
            }
            ad.univariate = PiecewisePolynomial(std::move(cuts), std::move(polys));
            ad.pieces.clear();
            for (auto& [info, p] : upieces)
                ad.pieces.push_back(info);
        } else {
            try {
                ad.multivariate = MultivariatePP(dim, std::move(mpieces));
            } catch (const ContractError&) {
                throw SemanticError("pieces of " + akey + " overlap (duplicate density)");
            }
        }
        if (!(std::abs(mass - 1.0) <= opt.mass_tolerance))
            throw SemanticError("density of " + akey + " integrates to " + format_number(mass) + ", not 1");
        hp.attributes.emplace(akey, std::move(ad));
    }

    // stratification: SCCs of the predicate dependency graph, dependencies first
    std::map<std::string, std::vector<std::pair<std::string, bool>>> deps;
    std::set<std::string> nodes(defined.begin(), defined.end());
    for (const auto& [k, a] : hp.attributes)
        nodes.insert(k);
    for (const auto& s : prog.statements)
        if (const auto* c = std::get_if<Clause>(&s))
            for (const auto& l : c->body)
                if (!is_builtin(l.atom)) {
                    deps[predicate_key(c->head)].push_back({predicate_key(l.atom), l.negated});
                    nodes.insert(predicate_key(l.atom));
                }
    {
        std::map<std::string, int> index, low;
        std::map<std::string, bool> on_stack;
        std::vector<std::string> stack;
        std::vector<std::vector<std::string>> sccs;
        int counter = 0;
        std::function<void(const std::string&)> visit = [&](const std::string& v) {
            index[v] = low[v] = counter++;
            stack.push_back(v);
            on_stack[v] = true;
            for (const auto& [w, neg] : deps[v]) {
                if (!index.count(w)) {
                    visit(w);
                    low[v] = std::min(low[v], low[w]);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
            }
            if (low[v] == index[v]) {
                std::vector<std::string> comp;
                std::string w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp.push_back(w);
                } while (w != v);
                sccs.push_back(std::move(comp));
            }
        };
        for (const auto& n : nodes)
            if (!index.count(n))
                visit(n);
        // Tarjan emits components in reverse topological order of the dependency edges,
        // i.e. dependencies first.
        for (std::size_t i = 0; i < sccs.size(); ++i)
            for (const auto& v : sccs[i])
                hp.stratum[v] = i;
        for (const auto& [v, ds] : deps)
            for (const auto& [w, neg] : ds)
                if (neg && hp.stratum[v] == hp.stratum[w])
                    throw SemanticError("negation cycle through " + v + " and " + w + " (program is not stratified)");
    }

    // queried predicates must be defined
    for (std::size_t i = 0; i < prog.statements.size(); ++i)
        if (const auto* q = std::get_if<Query>(&prog.statements[i])) {
            const std::string key = predicate_key(q->atom);
            if (!defined.count(key) && !hp.attributes.count(key) && !continuous_by_pred.count(key))
                throw SemanticError(where(prog, i) + "query predicate " + key + " is not defined");
        }

    hp.program = std::move(prog);
    return hp;
}

inline HybridProgram load_program(std::string_view text, const LoadOptions& opt = {})
{
    return load_program(parse(text), opt);
}

} // namespace pplp
