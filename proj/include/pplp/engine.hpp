#pragma once

#include <pplp/error.hpp>
#include <pplp/model.hpp>
#include <pplp/multivariate.hpp>
#include <pplp/polynomial.hpp>
#include <pplp/program.hpp>
#include <pplp/term.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace pplp
{

struct EngineOptions
{
    double choice_cap = 16777216.0; // 2^24 joint assignments
    std::size_t max_atoms = 2000000;
    std::size_t max_term_depth = 12;
};

/// Ground program restricted to what the roots (queries and evidence) depend on.
struct GroundProgram
{
    struct RandomVar
    {
        std::string attribute; // predicate key
        std::vector<Term> entity;
    };
    struct Constraint
    {
        std::size_t var;
        std::size_t dim;
        Interval range;
    };
    struct Choice
    {
        std::size_t atom;
        double probability;
    };
    struct GroundClause
    {
        std::size_t head;
        std::vector<std::size_t> pos, neg, constraints;
        std::size_t stratum;
    };

    const HybridProgram* source = nullptr;
    std::vector<Atom> atoms;
    std::unordered_map<std::string, std::size_t> index;
    std::vector<bool> certain;   // facts and attribute atoms
    std::vector<bool> possible;  // derivable in some world
    std::vector<Choice> choices; // probabilistic facts with 0 < p < 1
    std::vector<RandomVar> variables;
    std::vector<Constraint> constraints;
    std::vector<GroundClause> clauses;
    std::vector<std::size_t> queries;
    std::vector<std::pair<std::size_t, bool>> evidence;

    std::optional<std::size_t> find(const Atom& a) const
    {
        auto it = index.find(to_string(a));
        if (it == index.end())
            return std::nullopt;
        return it->second;
    }
};

/// Atomic cells of one random variable, merged by the truth pattern of its constraints.
struct VariablePartition
{
    struct Class
    {
        std::vector<bool> holds; // per entry of `constraints`
        double mass = 0.0;
    };
    std::size_t var = 0;
    std::vector<std::size_t> constraints;
    std::vector<HyperCube> cells;
    std::vector<double> masses;
    std::vector<Class> classes;
};

struct DomainPartition
{
    std::vector<VariablePartition> vars;

    std::size_t cell_count() const
    {
        std::size_t n = 0;
        for (const auto& v : vars)
            n += v.cells.size();
        return n;
    }
};

struct QueryResult
{
    Atom query;
    double probability = 0.0;
    bool conditioned = false;
    std::size_t cells = 0;
    double choices = 0.0;
};

namespace detail
{

inline std::size_t term_depth(const Term& t)
{
    std::size_t d = 0;
    for (const auto& a : t.args)
        d = std::max(d, term_depth(a));
    return d + 1;
}

// one-way matching of a pattern against a ground term, extending theta
inline bool match(const Term& pat, const Term& g, Substitution& theta)
{
    if (pat.kind == Term::Kind::Variable) {
        auto it = theta.find(pat.name);
        if (it != theta.end())
            return it->second == g;
        theta.emplace(pat.name, g);
        return true;
    }
    if (pat.kind != g.kind || pat.name != g.name || pat.args.size() != g.args.size())
        return false;
    if (pat.kind == Term::Kind::Number && pat.value != g.value)
        return false;
    for (std::size_t i = 0; i < pat.args.size(); ++i)
        if (!match(pat.args[i], g.args[i], theta))
            return false;
    return true;
}

inline bool match(const Atom& pat, const Atom& g, Substitution& theta)
{
    if (pat.predicate != g.predicate || pat.args.size() != g.args.size())
        return false;
    for (std::size_t i = 0; i < pat.args.size(); ++i)
        if (!match(pat.args[i], g.args[i], theta))
            return false;
    return true;
}

class Grounder
{
public:
    Grounder(const HybridProgram& hp, const EngineOptions& opt) : hp_(hp), opt_(opt) {}

    GroundProgram run(std::span<const Atom> queries, std::span<const Evidence> evidence)
    {
        collect_universe(queries, evidence);
        seed();
        saturate();
        return select(queries, evidence);
    }

private:
    struct Instance
    {
        std::size_t head;
        std::vector<std::size_t> pos, neg;
        std::vector<GroundProgram::Constraint> constraints;
        std::size_t stratum;
    };

    const HybridProgram& hp_;
    const EngineOptions& opt_;
    std::vector<Term> universe_;
    std::vector<Atom> atoms_;
    std::unordered_map<std::string, std::size_t> index_;
    std::map<std::string, std::vector<std::size_t>> by_pred_;
    std::vector<bool> certain_;
    std::vector<std::pair<std::size_t, double>> facts_; // atom, probability
    std::vector<GroundProgram::RandomVar> vars_;
    std::map<std::string, std::size_t> var_index_;
    std::vector<Instance> instances_;
    std::set<std::string> instance_keys_;

    std::size_t intern(const Atom& a, bool* fresh = nullptr)
    {
        const std::string key = to_string(a);
        auto [it, inserted] = index_.try_emplace(key, atoms_.size());
        if (inserted) {
            for (const auto& t : a.args)
                if (term_depth(t) > opt_.max_term_depth)
                    throw GroundingError("grounding does not terminate: term depth exceeded at " + key);
            if (atoms_.size() >= opt_.max_atoms)
                throw GroundingError("grounding does not terminate: more than " + std::to_string(opt_.max_atoms) +
                                     " ground atoms");
            atoms_.push_back(a);
            certain_.push_back(false);
            by_pred_[predicate_key(a)].push_back(it->second);
        }
        if (fresh)
            *fresh = inserted;
        return it->second;
    }

    void add_universe(const Term& t)
    {
        if (t.is_ground() && std::find(universe_.begin(), universe_.end(), t) == universe_.end())
            universe_.push_back(t);
    }

    void collect_universe(std::span<const Atom> queries, std::span<const Evidence> evidence)
    {
        auto from_atom = [&](const Atom& a) {
            if (is_builtin(a))
                return;
            const AttributeDensity* ad = hp_.attribute(predicate_key(a));
            for (std::size_t i = 0; i < a.args.size(); ++i)
                if (!(ad && ad->is_continuous_position(i)))
                    add_universe(a.args[i]);
        };
        for (const auto& s : hp_.program.statements) {
            if (const auto* c = std::get_if<Clause>(&s)) {
                from_atom(c->head);
                for (const auto& l : c->body)
                    from_atom(l.atom);
            } else if (const auto* f = std::get_if<ProbFact>(&s)) {
                from_atom(f->atom);
            } else if (const auto* f = std::get_if<Fact>(&s)) {
                from_atom(f->atom);
            } else if (const auto* q = std::get_if<Query>(&s)) {
                from_atom(q->atom);
            } else if (const auto* e = std::get_if<Evidence>(&s)) {
                from_atom(e->atom);
            }
        }
        for (const auto& q : queries)
            from_atom(q);
        for (const auto& e : evidence)
            from_atom(e.atom);
    }

    // calls f(theta) for every assignment of `vars` over the universe
    template <class F>
    void enumerate_over_universe(const std::vector<std::string>& vars, Substitution theta, F&& f)
    {
        if (vars.empty()) {
            f(theta);
            return;
        }
        std::vector<std::size_t> at(vars.size(), 0);
        if (universe_.empty())
            return;
        for (;;) {
            for (std::size_t i = 0; i < vars.size(); ++i)
                theta[vars[i]] = universe_[at[i]];
            f(theta);
            std::size_t k = 0;
            while (k < vars.size() && ++at[k] == universe_.size())
                at[k++] = 0;
            if (k == vars.size())
                return;
        }
    }

    std::size_t random_var(const std::string& attr, const std::vector<Term>& entity)
    {
        const std::string key = to_string(attr, entity);
        auto [it, inserted] = var_index_.try_emplace(key, vars_.size());
        if (inserted)
            vars_.push_back({attr, entity});
        return it->second;
    }

    void seed()
    {
        for (const auto& s : hp_.program.statements) {
            if (const auto* f = std::get_if<Fact>(&s)) {
                certain_[intern(f->atom)] = true;
            } else if (const auto* f = std::get_if<ProbFact>(&s)) {
                enumerate_over_universe(variables_of(f->atom), {}, [&](const Substitution& th) {
                    const std::size_t id = intern(substitute(f->atom, th));
                    if (f->probability == 1.0)
                        certain_[id] = true;
                    else if (f->probability > 0.0)
                        facts_.push_back({id, f->probability});
                });
            }
        }
        // one random variable per entity tuple of every attribute
        for (const auto& [key, ad] : hp_.attributes) {
            std::vector<std::string> ents;
            Atom pattern{ad.name, {}};
            for (std::size_t i = 0; i < ad.arity; ++i) {
                if (ad.is_continuous_position(i)) {
                    pattern.args.push_back(Term::symbol("")); // filled below
                } else {
                    ents.push_back("_E" + std::to_string(i));
                    pattern.args.push_back(Term::variable(ents.back()));
                }
            }
            enumerate_over_universe(ents, {}, [&](const Substitution& th) {
                Atom a = substitute(pattern, th);
                std::vector<Term> entity;
                for (std::size_t i = 0; i < ad.arity; ++i)
                    if (!ad.is_continuous_position(i))
                        entity.push_back(a.args[i]);
                random_var(key, entity);
                for (std::size_t d = 0; d < ad.continuous.size(); ++d)
                    a.args[ad.continuous[d]] = Term::random(key, entity, d);
                certain_[intern(a)] = true;
            });
        }
    }

    // grounds one clause against the current possible atoms; returns true if a new head appeared
    bool ground_clause(const Clause& c)
    {
        std::vector<const Literal*> positive, rest;
        for (const auto& l : c.body)
            (!l.negated && !is_builtin(l.atom) ? positive : rest).push_back(&l);
        bool grew = false;
        Substitution theta;
        join(c, positive, 0, theta, rest, grew);
        return grew;
    }

    void join(const Clause& c, const std::vector<const Literal*>& positive, std::size_t i, Substitution& theta,
              const std::vector<const Literal*>& rest, bool& grew)
    {
        if (i == positive.size()) {
            std::vector<std::string> unbound;
            auto note = [&](const Atom& a) {
                for (const auto& v : variables_of(a))
                    if (!theta.count(v) && std::find(unbound.begin(), unbound.end(), v) == unbound.end())
                        unbound.push_back(v);
            };
            note(c.head);
            for (const auto* l : rest)
                note(l->atom);
            enumerate_over_universe(unbound, theta, [&](const Substitution& th) { emit(c, positive, rest, th, grew); });
            return;
        }
        const Atom& pat = positive[i]->atom;
        auto it = by_pred_.find(predicate_key(pat));
        if (it == by_pred_.end())
            return;
        const std::vector<std::size_t> candidates = it->second; // may grow while emitting
        for (std::size_t id : candidates) {
            Substitution next = theta;
            if (match(pat, atoms_[id], next))
                join(c, positive, i + 1, next, rest, grew);
        }
    }

    void emit(const Clause& c, const std::vector<const Literal*>& positive, const std::vector<const Literal*>& rest,
              const Substitution& th, bool& grew)
    {
        Instance inst;
        for (const auto* l : rest) {
            const Atom a = substitute(l->atom, th);
            if (is_builtin(a)) {
                const Term& x = a.args[0];
                const Interval r = builtin_range(a);
                if (x.is_random()) {
                    const std::size_t v = random_var(x.name, x.args);
                    inst.constraints.push_back({v, static_cast<std::size_t>(x.value), r});
                } else if (x.is_number()) {
                    if (!(x.value >= r.lo && x.value <= r.hi))
                        return; // false comparison on observed value
                } else {
                    return; // comparison on a non-numeric term never holds
                }
            } else {
                inst.neg.push_back(intern(a));
            }
        }
        for (const auto* l : positive) {
            const std::size_t id = intern(substitute(l->atom, th));
            if (!certain_[id])
                inst.pos.push_back(id);
        }
        const Atom head = substitute(c.head, th);
        bool fresh = false;
        inst.head = intern(head, &fresh);
        auto st = hp_.stratum.find(predicate_key(head));
        inst.stratum = st == hp_.stratum.end() ? 0 : st->second;
        std::string key = std::to_string(inst.head) + ":";
        for (auto p : inst.pos)
            key += std::to_string(p) + ",";
        key += "|";
        for (auto p : inst.neg)
            key += std::to_string(p) + ",";
        key += "|";
        for (const auto& k : inst.constraints)
            key += std::to_string(k.var) + "." + std::to_string(k.dim) + "[" + format_number(k.range.lo) + "," +
                   format_number(k.range.hi) + "]";
        if (instance_keys_.insert(key).second) {
            instances_.push_back(std::move(inst));
            grew = true;
        }
        grew = grew || fresh;
    }

    void saturate()
    {
        std::vector<const Clause*> clauses;
        for (const auto& s : hp_.program.statements)
            if (const auto* c = std::get_if<Clause>(&s))
                clauses.push_back(c);
        for (bool grew = true; grew;) {
            grew = false;
            for (const auto* c : clauses)
                grew = ground_clause(*c) || grew;
        }
    }

    GroundProgram select(std::span<const Atom> queries, std::span<const Evidence> evidence)
    {
        // possible = derivable from certain atoms, chosen facts and clause heads
        std::vector<bool> possible(atoms_.size(), false);
        for (std::size_t i = 0; i < atoms_.size(); ++i)
            possible[i] = certain_[i];
        for (const auto& [a, p] : facts_)
            possible[a] = true;
        for (const auto& inst : instances_)
            possible[inst.head] = true;

        std::vector<std::size_t> roots;
        std::vector<std::size_t> query_ids;
        for (const auto& q : queries) {
            if (q.is_ground()) {
                query_ids.push_back(intern(q));
                continue;
            }
            auto it = by_pred_.find(predicate_key(q));
            if (it == by_pred_.end())
                continue;
            for (std::size_t id : it->second) {
                Substitution th;
                if (possible.size() > id && possible[id] && match(q, atoms_[id], th))
                    query_ids.push_back(id);
            }
        }
        std::vector<std::pair<std::size_t, bool>> ev;
        for (const auto& e : evidence) {
            if (!e.atom.is_ground())
                throw GroundingError("evidence " + to_string(e.atom) + " is not ground");
            ev.push_back({intern(e.atom), e.value});
        }
        possible.resize(atoms_.size(), false);
        roots = query_ids;
        for (const auto& [a, v] : ev)
            roots.push_back(a);

        // backward relevance
        std::vector<std::vector<std::size_t>> by_head(atoms_.size());
        for (std::size_t i = 0; i < instances_.size(); ++i)
            by_head[instances_[i].head].push_back(i);
        std::vector<bool> relevant(atoms_.size(), false), used(instances_.size(), false);
        std::vector<std::size_t> todo;
        for (auto r : roots)
            if (!relevant[r]) {
                relevant[r] = true;
                todo.push_back(r);
            }
        while (!todo.empty()) {
            const std::size_t a = todo.back();
            todo.pop_back();
            for (auto ci : by_head[a]) {
                if (used[ci])
                    continue;
                used[ci] = true;
                auto visit = [&](std::size_t b) {
                    if (!relevant[b]) {
                        relevant[b] = true;
                        todo.push_back(b);
                    }
                };
                for (auto b : instances_[ci].pos)
                    visit(b);
                for (auto b : instances_[ci].neg)
                    visit(b);
            }
        }

        GroundProgram gp;
        gp.source = &hp_;
        std::vector<std::size_t> remap(atoms_.size(), SIZE_MAX);
        for (std::size_t i = 0; i < atoms_.size(); ++i)
            if (relevant[i]) {
                remap[i] = gp.atoms.size();
                gp.index.emplace(to_string(atoms_[i]), gp.atoms.size());
                gp.atoms.push_back(atoms_[i]);
                gp.certain.push_back(certain_[i]);
                gp.possible.push_back(possible[i]);
            }
        for (const auto& [a, p] : facts_)
            if (relevant[a] && !certain_[a])
                gp.choices.push_back({remap[a], p});

        std::vector<std::size_t> var_remap(vars_.size(), SIZE_MAX);
        std::map<std::string, std::size_t> cons_index;
        for (std::size_t ci = 0; ci < instances_.size(); ++ci) {
            if (!used[ci])
                continue;
            const auto& inst = instances_[ci];
            if (certain_[inst.head])
                continue; // already true in every world
            GroundProgram::GroundClause g{remap[inst.head], {}, {}, {}, inst.stratum};
            bool dead = false;
            for (auto b : inst.pos) {
                if (!possible[b])
                    dead = true;
                g.pos.push_back(remap[b]);
            }
            for (auto b : inst.neg) {
                if (certain_[b])
                    dead = true;
                if (possible[b])
                    g.neg.push_back(remap[b]);
            }
            if (dead)
                continue;
            for (const auto& k : inst.constraints) {
                if (var_remap[k.var] == SIZE_MAX) {
                    var_remap[k.var] = gp.variables.size();
                    gp.variables.push_back(vars_[k.var]);
                }
                const std::string key = std::to_string(var_remap[k.var]) + "." + std::to_string(k.dim) + "[" +
                                        format_number(k.range.lo) + "," + format_number(k.range.hi) + "]";
                auto [it, inserted] = cons_index.try_emplace(key, gp.constraints.size());
                if (inserted)
                    gp.constraints.push_back({var_remap[k.var], k.dim, k.range});
                g.constraints.push_back(it->second);
            }
            gp.clauses.push_back(std::move(g));
        }
        std::stable_sort(gp.clauses.begin(), gp.clauses.end(),
                         [](const auto& a, const auto& b) { return a.stratum < b.stratum; });
        for (auto q : query_ids)
            gp.queries.push_back(remap[q]);
        for (const auto& [a, v] : ev)
            gp.evidence.push_back({remap[a], v});
        return gp;
    }
};

} // namespace detail

/// Grounds the program over its constants and keeps the part relevant to the queries and
/// evidence. Without explicit roots the program's own query/evidence statements are used.
inline GroundProgram ground(const HybridProgram& hp, std::span<const Atom> queries, std::span<const Evidence> evidence,
                            const EngineOptions& opt = {})
{
    return detail::Grounder(hp, opt).run(queries, evidence);
}

inline GroundProgram ground(const HybridProgram& hp, const EngineOptions& opt = {})
{
    std::vector<Atom> qs;
    std::vector<Evidence> ev;
    for (const auto& s : hp.program.statements) {
        if (const auto* q = std::get_if<Query>(&s))
            qs.push_back(q->atom);
        else if (const auto* e = std::get_if<Evidence>(&s))
            ev.push_back(*e);
    }
    return ground(hp, qs, ev, opt);
}

/// Cells of every relevant random variable: the density's breakpoints refined by every
/// comparison constant that mentions the variable.
inline DomainPartition partition_domains(const GroundProgram& gp)
{
    DomainPartition part;
    for (std::size_t v = 0; v < gp.variables.size(); ++v) {
        const AttributeDensity* ad = gp.source->attribute(gp.variables[v].attribute);
        if (!ad)
            throw ContractError("no density for " + gp.variables[v].attribute);
        VariablePartition vp;
        vp.var = v;
        for (std::size_t k = 0; k < gp.constraints.size(); ++k)
            if (gp.constraints[k].var == v)
                vp.constraints.push_back(k);

        const std::size_t dim = ad->dimension();
        std::vector<std::vector<double>> bounds(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            bounds[d] = ad->breakpoints(d);
            const double lo = bounds[d].front(), hi = bounds[d].back();
            for (auto k : vp.constraints) {
                const auto& c = gp.constraints[k];
                if (c.dim != d)
                    continue;
                for (double x : {c.range.lo, c.range.hi})
                    if (x > lo && x < hi)
                        bounds[d].push_back(x);
            }
            std::sort(bounds[d].begin(), bounds[d].end());
            bounds[d].erase(std::unique(bounds[d].begin(), bounds[d].end()), bounds[d].end());
        }

        std::vector<std::size_t> at(dim, 0);
        std::map<std::vector<bool>, std::size_t> class_of;
        for (;;) {
            HyperCube cell;
            for (std::size_t d = 0; d < dim; ++d)
                cell.bounds.push_back({bounds[d][at[d]], bounds[d][at[d] + 1]});
            const double m = ad->mass(cell);
            if (m > 0.0) {
                std::vector<bool> holds;
                for (auto k : vp.constraints) {
                    const auto& c = gp.constraints[k];
                    const auto& iv = cell.bounds[c.dim];
                    const double mid = 0.5 * (iv.lo + iv.hi);
                    holds.push_back(c.range.contains(mid));
                }
                auto [it, inserted] = class_of.try_emplace(holds, vp.classes.size());
                if (inserted)
                    vp.classes.push_back({holds, 0.0});
                vp.classes[it->second].mass += m;
                vp.cells.push_back(cell);
                vp.masses.push_back(m);
            }
            std::size_t d = 0;
            while (d < dim && ++at[d] + 1 == bounds[d].size())
                at[d++] = 0;
            if (d == dim)
                break;
        }
        part.vars.push_back(std::move(vp));
    }
    return part;
}

namespace detail
{

struct Totals
{
    double evidence = 0.0;
    std::vector<double> joint; // per target
    double choices = 0.0;
};

/// Sums world weights over every subset of probabilistic facts and every cell class.
inline Totals enumerate_worlds(const GroundProgram& gp, const DomainPartition& part,
                               std::span<const std::size_t> targets,
                               std::span<const std::pair<std::size_t, bool>> evidence, const EngineOptions& opt)
{
    const std::size_t nf = gp.choices.size();
    double space = std::ldexp(1.0, static_cast<int>(std::min<std::size_t>(nf, 2000)));
    for (const auto& vp : part.vars)
        space *= static_cast<double>(std::max<std::size_t>(1, vp.classes.size()));
    if (space > opt.choice_cap)
        throw InferenceRefusal(space, opt.choice_cap);

    Totals tot;
    tot.joint.assign(targets.size(), 0.0);
    tot.choices = space;

    // constraint truth per (variable, class)
    std::vector<std::size_t> cons_var(gp.constraints.size()), cons_slot(gp.constraints.size());
    for (std::size_t i = 0; i < part.vars.size(); ++i)
        for (std::size_t s = 0; s < part.vars[i].constraints.size(); ++s) {
            cons_var[part.vars[i].constraints[s]] = i;
            cons_slot[part.vars[i].constraints[s]] = s;
        }

    std::vector<std::size_t> pick(part.vars.size(), 0);
    for (const auto& vp : part.vars)
        if (vp.classes.empty())
            return tot; // zero-mass variable: nothing to sum

    std::vector<char> truth(gp.atoms.size());
    std::vector<char> cons_truth(gp.constraints.size());
    const std::uint64_t fact_worlds = std::uint64_t(1) << nf;

    for (;;) {
        double cell_weight = 1.0;
        for (std::size_t i = 0; i < part.vars.size(); ++i)
            cell_weight *= part.vars[i].classes[pick[i]].mass;
        for (std::size_t k = 0; k < gp.constraints.size(); ++k)
            cons_truth[k] = part.vars[cons_var[k]].classes[pick[cons_var[k]]].holds[cons_slot[k]];

        for (std::uint64_t mask = 0; mask < fact_worlds; ++mask) {
            double w = cell_weight;
            for (std::size_t a = 0; a < gp.atoms.size(); ++a)
                truth[a] = gp.certain[a];
            for (std::size_t f = 0; f < nf; ++f) {
                const auto& ch = gp.choices[f];
                if (mask >> f & 1) {
                    truth[ch.atom] = 1;
                    w *= ch.probability;
                } else {
                    w *= 1.0 - ch.probability;
                }
            }
            if (w == 0.0)
                continue;
            // strata in order, each to a fixpoint
            std::size_t i = 0;
            while (i < gp.clauses.size()) {
                std::size_t j = i;
                while (j < gp.clauses.size() && gp.clauses[j].stratum == gp.clauses[i].stratum)
                    ++j;
                for (bool changed = true; changed;) {
                    changed = false;
                    for (std::size_t c = i; c < j; ++c) {
                        const auto& g = gp.clauses[c];
                        if (truth[g.head])
                            continue;
                        bool ok = true;
                        for (auto b : g.pos)
                            ok = ok && truth[b];
                        for (auto b : g.neg)
                            ok = ok && !truth[b];
                        for (auto k : g.constraints)
                            ok = ok && cons_truth[k];
                        if (ok) {
                            truth[g.head] = 1;
                            changed = true;
                        }
                    }
                }
                i = j;
            }
            bool consistent = true;
            for (const auto& [a, v] : evidence)
                consistent = consistent && (truth[a] != 0) == v;
            if (!consistent)
                continue;
            tot.evidence += w;
            for (std::size_t t = 0; t < targets.size(); ++t)
                if (truth[targets[t]])
                    tot.joint[t] += w;
        }

        std::size_t v = 0;
        while (v < part.vars.size() && ++pick[v] == part.vars[v].classes.size())
            pick[v++] = 0;
        if (v == part.vars.size())
            break;
    }
    return tot;
}

inline double clamp_probability(double p) { return std::clamp(p, 0.0, 1.0); }

} // namespace detail

/// Success probability of a ground atom of `gp` (no evidence).
inline QueryResult success_probability(const GroundProgram& gp, const DomainPartition& part, const Atom& query,
                                       const EngineOptions& opt = {})
{
    QueryResult r{query, 0.0, false, part.cell_count(), 0.0};
    const auto id = gp.find(query);
    if (!id)
        return r; // not derivable from the program
    const std::size_t t[] = {*id};
    const auto tot = detail::enumerate_worlds(gp, part, t, {}, opt);
    r.probability = detail::clamp_probability(tot.joint[0]);
    r.choices = tot.choices;
    return r;
}

/// P(query | evidence) = P(query, evidence) / P(evidence).
inline QueryResult conditioned_probability(const GroundProgram& gp, const DomainPartition& part, const Atom& query,
                                           std::span<const Evidence> evidence, const EngineOptions& opt = {})
{
    QueryResult r{query, 0.0, true, part.cell_count(), 0.0};
    std::vector<std::pair<std::size_t, bool>> ev;
    for (const auto& e : evidence) {
        const auto id = gp.find(e.atom);
        if (!id) {
            if (e.value)
                throw InconsistentEvidence("evidence " + to_string(e.atom) + " has probability 0");
            continue;
        }
        ev.push_back({*id, e.value});
    }
    const auto id = gp.find(query);
    std::vector<std::size_t> t;
    if (id)
        t.push_back(*id);
    const auto tot = detail::enumerate_worlds(gp, part, t, ev, opt);
    if (!(tot.evidence > 0.0))
        throw InconsistentEvidence("evidence has probability 0");
    r.choices = tot.choices;
    r.probability = id ? detail::clamp_probability(tot.joint[0] / tot.evidence) : 0.0;
    return r;
}

/// Answers every query of `gp` under its evidence in one enumeration.
inline std::vector<QueryResult> solve(const GroundProgram& gp, const DomainPartition& part, const EngineOptions& opt = {})
{
    const auto tot = detail::enumerate_worlds(gp, part, gp.queries, gp.evidence, opt);
    const bool conditioned = !gp.evidence.empty();
    if (conditioned && !(tot.evidence > 0.0))
        throw InconsistentEvidence("evidence has probability 0");
    std::vector<QueryResult> out;
    std::set<std::size_t> seen;
    for (std::size_t i = 0; i < gp.queries.size(); ++i) {
        if (!seen.insert(gp.queries[i]).second)
            continue;
        const double p = conditioned ? tot.joint[i] / tot.evidence : tot.joint[i];
        out.push_back({gp.atoms[gp.queries[i]], detail::clamp_probability(p), conditioned, part.cell_count(), tot.choices});
    }
    return out;
}

/// Convenience: ground, partition and answer a single query under optional evidence.
inline QueryResult probability(const HybridProgram& hp, const Atom& query, std::span<const Evidence> evidence = {},
                               const EngineOptions& opt = {})
{
    const Atom qs[] = {query};
    const auto gp = ground(hp, qs, evidence, opt);
    const auto part = partition_domains(gp);
    Atom target = query;
    if (!query.is_ground()) {
        // a continuous position grounds to its random variable; anything else must be unique
        std::set<std::size_t> ids(gp.queries.begin(), gp.queries.end());
        if (ids.size() > 1)
            throw ContractError("query " + to_string(query) + " has " + std::to_string(ids.size()) +
                                " ground instances");
        if (ids.size() == 1)
            target = gp.atoms[*ids.begin()];
    }
    QueryResult r = evidence.empty() ? success_probability(gp, part, target, opt)
                                     : conditioned_probability(gp, part, target, evidence, opt);
    r.query = query;
    return r;
}

/// Runs the program's own queries under its own evidence.
inline std::vector<QueryResult> run_queries(const HybridProgram& hp, const EngineOptions& opt = {})
{
    const auto gp = ground(hp, opt);
    return solve(gp, partition_domains(gp), opt);
}

} // namespace pplp
