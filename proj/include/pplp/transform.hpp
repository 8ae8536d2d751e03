#pragma once

#include <pplp/error.hpp>
#include <pplp/model.hpp>
#include <pplp/program.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace pplp
{

/// One row of the piece table: which attribute region a discrete piece fact stands for.
struct PieceMapping
{
    std::string piece;                     // predicate key of the piece atom
    std::string name;                      // piece predicate name
    std::string attribute;                 // attribute predicate key
    HyperCube region;
    double probability = 0.0;
    std::vector<std::size_t> entity_args;  // attribute argument positions of the piece's entity arguments
    std::string parent;                    // set when the piece was split off a coarser one
};

struct DiscretizedProgram
{
    Program program;
    std::vector<PieceMapping> mapping;

    /// Sum of piece probabilities for one attribute.
    double attribute_mass(const std::string& attribute) const
    {
        double s = 0.0;
        for (const auto& m : mapping)
            if (m.attribute == attribute)
                s += m.probability;
        return s;
    }

    const PieceMapping* find(const std::string& piece) const
    {
        for (const auto& m : mapping)
            if (m.piece == piece)
                return &m;
        return nullptr;
    }
};

namespace detail
{

/// Entity argument positions of a piece head, as positions in its attribute atom.
inline std::vector<std::size_t> entity_positions(const Clause& guard, const AttributeDensity& ad)
{
    const Atom* attr = nullptr;
    for (const auto& l : guard.body)
        if (!is_builtin(l.atom))
            attr = &l.atom;
    std::vector<std::size_t> out;
    for (const auto& h : guard.head.args) {
        if (!h.is_variable())
            continue;
        for (std::size_t i = 0; i < attr->args.size(); ++i)
            if (attr->args[i] == h && !ad.is_continuous_position(i))
                out.push_back(i);
    }
    return out;
}

/// Split points requested by evidence: constants of builtins applied to a univariate attribute
/// inside the clauses that define an evidence predicate.
inline std::map<std::string, std::set<double>> evidence_cuts(const HybridProgram& hp)
{
    std::set<std::string> evidence_preds;
    for (const auto& s : hp.program.statements)
        if (const auto* e = std::get_if<Evidence>(&s))
            evidence_preds.insert(predicate_key(e->atom));
    std::map<std::string, std::set<double>> cuts;
    for (const auto& s : hp.program.statements) {
        const auto* c = std::get_if<Clause>(&s);
        if (!c || !evidence_preds.count(predicate_key(c->head)) || hp.piece_attribute.count(predicate_key(c->head)))
            continue;
        for (const auto& l : c->body) {
            const auto* ad = hp.attribute(predicate_key(l.atom));
            if (!ad || ad->dimension() != 1)
                continue;
            const Term& v = l.atom.args[ad->continuous[0]];
            for (const auto& b : c->body) {
                if (!is_builtin(b.atom) || !(b.atom.args[0] == v))
                    continue;
                for (std::size_t i = 1; i < b.atom.args.size(); ++i)
                    if (b.atom.args[i].is_number())
                        cuts[ad->predicate].insert(b.atom.args[i].value);
            }
        }
    }
    return cuts;
}

} // namespace detail

/// Replaces every continuous fact by a scalar fact holding the mass of its piece. Guard clauses stay
/// as they are. Pieces cut by the interval of an evidence predicate are split there first; the old
/// piece predicate is then defined by its parts.
inline DiscretizedProgram discretize_program(const HybridProgram& hp)
{
    const auto cuts = detail::evidence_cuts(hp);
    std::set<std::string> taken;
    for (const auto& s : hp.program.statements) {
        if (const auto* c = std::get_if<Clause>(&s))
            taken.insert(c->head.predicate);
        else if (const auto* f = std::get_if<ContinuousFact>(&s))
            taken.insert(f->atom.predicate);
    }

    // piece statement index -> (attribute, info)
    std::map<std::size_t, std::pair<const AttributeDensity*, const PieceInfo*>> piece_of;
    std::set<std::size_t> guards;
    for (const auto& [key, ad] : hp.attributes)
        for (const auto& p : ad.pieces) {
            piece_of[p.statement] = {&ad, &p};
            guards.insert(p.guard);
        }

    DiscretizedProgram dp;
    const auto& prog = hp.program;
    for (std::size_t i = 0; i < prog.statements.size(); ++i) {
        const auto& s = prog.statements[i];
        auto it = piece_of.find(i);
        if (it == piece_of.end()) {
            dp.program.add(s, prog.position(i));
            continue;
        }
        const auto& [ad, info] = it->second;
        const auto& fact = std::get<ContinuousFact>(s);
        const auto& guard = std::get<Clause>(prog.statements[info->guard]);
        const auto ents = detail::entity_positions(guard, *ad);

        std::vector<double> split;
        if (auto c = cuts.find(ad->predicate); c != cuts.end())
            for (double x : c->second)
                if (x > info->cube.bounds[0].lo && x < info->cube.bounds[0].hi)
                    split.push_back(x);

        if (split.empty()) {
            const double p = ad->mass(info->cube);
            dp.program.add(ProbFact{p, fact.atom}, prog.position(i));
            dp.mapping.push_back({info->predicate, fact.atom.predicate, ad->predicate, info->cube, p, ents, {}});
            continue;
        }

        // refine: name_1 .. name_m over the sub-intervals, and name(...) :- name_j(...).
        std::vector<double> edges{info->cube.bounds[0].lo};
        edges.insert(edges.end(), split.begin(), split.end());
        edges.push_back(info->cube.bounds[0].hi);
        const Atom* attr_atom = nullptr;
        for (const auto& l : guard.body)
            if (!is_builtin(l.atom))
                attr_atom = &l.atom;
        const Term var = attr_atom->args[ad->continuous[0]];
        for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
            const std::string name = fact.atom.predicate + "_" + std::to_string(j + 1);
            if (taken.count(name))
                throw ContractError("refined piece name " + name + " is already used");
            Atom head{name, guard.head.args};
            HyperCube cube{{Interval{edges[j], edges[j + 1]}}};
            const double p = ad->mass(cube);
            dp.program.add(ProbFact{p, Atom{name, fact.atom.args}}, prog.position(i));
            dp.program.add(Clause{head, {Literal{*attr_atom, false},
                                         Literal{Atom{"ininterval", {var, Term::number(edges[j]), Term::number(edges[j + 1])}},
                                                 false}}});
            dp.mapping.push_back({predicate_key(head), name, ad->predicate, cube, p, ents, info->predicate});
            dp.program.add(Clause{guard.head, {Literal{head, false}}});
        }
    }
    // the refined pieces' own guards were dropped above; the original guard clause is no longer valid
    if (!cuts.empty()) {
        std::set<std::string> refined;
        for (const auto& m : dp.mapping)
            if (!m.parent.empty())
                refined.insert(m.parent);
        Program kept;
        for (std::size_t i = 0; i < dp.program.statements.size(); ++i) {
            const auto* c = std::get_if<Clause>(&dp.program.statements[i]);
            bool drop = false;
            if (c && refined.count(predicate_key(c->head)))
                for (const auto& l : c->body)
                    drop = drop || is_builtin(l.atom);
            if (!drop)
                kept.add(dp.program.statements[i], dp.program.position(i));
        }
        dp.program = std::move(kept);
    }
    return dp;
}

/// Loads and discretizes; a piece whose guard does not bound it is a caller error here.
inline DiscretizedProgram discretize_program(const Program& prog)
{
    try {
        return discretize_program(load_program(prog));
    } catch (const UnboundedPiece& e) {
        throw ContractError(e.what());
    }
}

/// Piece facts for observed entities: the piece holding the value is true, the others false
/// (omitted). A missing value gives every piece its prior probability.
inline std::vector<Statement> entity_piece_facts(const DiscretizedProgram& dp, const std::string& attribute,
                                                 const std::vector<Term>& entity, std::optional<double> value)
{
    std::vector<Statement> out;
    for (const auto& m : dp.mapping) {
        if (m.attribute != attribute || m.region.dimension() != 1)
            continue;
        if (m.entity_args.size() != entity.size())
            throw ContractError("piece " + m.piece + " expects " + std::to_string(m.entity_args.size()) +
                                " entity arguments");
        Atom a{m.name, entity};
        if (!value) {
            out.push_back(ProbFact{m.probability, a});
            continue;
        }
        const auto& iv = m.region.bounds[0];
        // closed on the left, open on the right except for the last piece
        bool last = true;
        for (const auto& o : dp.mapping)
            if (o.attribute == attribute && o.region.bounds[0].lo >= iv.hi)
                last = false;
        if (*value >= iv.lo && (*value < iv.hi || (last && *value == iv.hi)))
            out.push_back(Fact{a});
    }
    return out;
}

/// Type of a predicate's argument positions, as used for bias and closed-world negatives.
struct ModeDecl
{
    std::string predicate;
    std::vector<std::string> types;

    std::string key() const { return predicate_key(predicate, types.size()); }
};

struct WeightedFact
{
    Atom atom;
    double probability = 1.0;
};

/// Input of the rule learner: background facts, labelled target examples and the bias.
struct LearningTask
{
    ModeDecl target;
    std::vector<WeightedFact> background;
    std::vector<Atom> positives;
    std::vector<Atom> negatives;
    std::vector<ModeDecl> bias;
    Program background_program; // discretized program the background came from
};

namespace detail
{

struct PositionTypes
{
    std::map<std::string, std::size_t> id;  // "key#i"
    std::vector<std::size_t> parent;

    std::size_t node(const std::string& key, std::size_t i)
    {
        auto [it, fresh] = id.emplace(key + "#" + std::to_string(i), parent.size());
        if (fresh)
            parent.push_back(parent.size());
        return it->second;
    }

    std::size_t root(std::size_t x)
    {
        while (parent[x] != x)
            x = parent[x] = parent[parent[x]];
        return x;
    }

    void unite(std::size_t a, std::size_t b)
    {
        a = root(a);
        b = root(b);
        if (a != b)
            parent[std::max(a, b)] = std::min(a, b);
    }
};

} // namespace detail

/// Builds the learning task for `target` (name, arity) from the discretized program, extra ground
/// background statements (e.g. entity piece facts) and positive examples. Argument types come from
/// constants shared between positions; negatives are every other tuple over the target's types.
inline LearningTask emit_learning_task(const DiscretizedProgram& dp, const std::string& target, std::size_t arity,
                                       const std::vector<Atom>& examples, const std::vector<Statement>& extra = {},
                                       std::size_t max_negatives = 1000000)
{
    if (examples.empty())
        throw ContractError("learning needs at least one positive example");
    const std::string tkey = predicate_key(target, arity);

    LearningTask task;
    task.background_program = dp.program;
    std::vector<std::string> order; // predicate keys by first appearance
    std::map<std::string, std::size_t> arities;
    auto take = [&](const Atom& a, double p) {
        if (!a.is_ground())
            return;
        const std::string k = predicate_key(a);
        if (k == tkey)
            throw ContractError("target " + tkey + " appears in the background");
        if (!arities.count(k)) {
            arities[k] = a.arity();
            order.push_back(k);
        }
        task.background.push_back({a, p});
    };
    auto scan = [&](const Statement& s) {
        if (const auto* f = std::get_if<Fact>(&s))
            take(f->atom, 1.0);
        else if (const auto* f = std::get_if<ProbFact>(&s))
            take(f->atom, f->probability);
        else if (const auto* c = std::get_if<Clause>(&s); c && predicate_key(c->head) == tkey)
            throw ContractError("target " + tkey + " is defined in the background");
    };
    for (const auto& s : dp.program.statements)
        scan(s);
    for (const auto& s : extra)
        scan(s);

    for (const auto& e : examples) {
        if (predicate_key(e) != tkey)
            throw ContractError("example " + to_string(e) + " is not an instance of " + tkey);
        if (!e.is_ground())
            throw ContractError("example " + to_string(e) + " is not ground");
    }

    // argument types: positions sharing a constant get the same type
    detail::PositionTypes types;
    std::map<std::string, std::size_t> first_seen;
    auto visit = [&](const Atom& a) {
        const std::string k = predicate_key(a);
        for (std::size_t i = 0; i < a.arity(); ++i) {
            const std::size_t n = types.node(k, i);
            auto [it, fresh] = first_seen.emplace(to_string(a.args[i]), n);
            if (!fresh)
                types.unite(n, it->second);
        }
    };
    for (const auto& f : task.background)
        visit(f.atom);
    for (const auto& e : examples)
        visit(e);

    std::map<std::size_t, std::string> names;
    auto type_of = [&](const std::string& k, std::size_t i) {
        const std::size_t r = types.root(types.node(k, i));
        auto [it, fresh] = names.emplace(r, "");
        if (fresh)
            it->second = "t" + std::to_string(names.size());
        return it->second;
    };
    task.target.predicate = target;
    for (std::size_t i = 0; i < arity; ++i)
        task.target.types.push_back(type_of(tkey, i));
    for (const auto& k : order) {
        ModeDecl m{k.substr(0, k.rfind('/')), {}};
        for (std::size_t i = 0; i < arities[k]; ++i)
            m.types.push_back(type_of(k, i));
        task.bias.push_back(std::move(m));
    }

    // closed world over the target's type domains
    std::map<std::string, std::vector<Term>> domain;
    std::map<std::string, std::set<std::string>> seen;
    auto add_const = [&](const std::string& ty, const Term& t) {
        if (seen[ty].insert(to_string(t)).second)
            domain[ty].push_back(t);
    };
    for (const auto& f : task.background)
        for (std::size_t i = 0; i < f.atom.arity(); ++i)
            add_const(type_of(predicate_key(f.atom), i), f.atom.args[i]);
    for (const auto& e : examples)
        for (std::size_t i = 0; i < arity; ++i)
            add_const(task.target.types[i], e.args[i]);

    std::set<std::string> pos;
    for (const auto& e : examples)
        if (pos.insert(to_string(e)).second)
            task.positives.push_back(e);

    double space = 1.0;
    for (const auto& ty : task.target.types)
        space *= static_cast<double>(domain[ty].size());
    if (space > static_cast<double>(max_negatives))
        throw ContractError("closed-world negatives for " + tkey + " would need " + format_number(space) + " tuples");
    std::vector<std::size_t> idx(arity, 0);
    while (true) {
        Atom a{target, {}};
        for (std::size_t i = 0; i < arity; ++i)
            a.args.push_back(domain[task.target.types[i]][idx[i]]);
        if (!pos.count(to_string(a)))
            task.negatives.push_back(std::move(a));
        std::size_t i = 0;
        while (i < arity && ++idx[i] == domain[task.target.types[i]].size())
            idx[i++] = 0;
        if (i == arity)
            break;
    }
    return task;
}

/// Task files in program syntax: background (discretized program and ground facts), examples as
/// evidence, bias as mode/1 and target/1 facts over type names.
struct TaskFiles
{
    std::string background;
    std::string examples;
    std::string bias;
};

namespace detail
{

inline Term mode_term(const ModeDecl& m)
{
    std::vector<Term> args;
    for (const auto& t : m.types)
        args.push_back(Term::symbol(t));
    return args.empty() ? Term::symbol(m.predicate) : Term::compound(m.predicate, std::move(args));
}

inline ModeDecl read_mode(const Term& t)
{
    ModeDecl m{t.name, {}};
    if (t.kind != Term::Kind::Symbol && t.kind != Term::Kind::Compound)
        throw ContractError("bad mode declaration " + to_string(t));
    for (const auto& a : t.args)
        m.types.push_back(a.name);
    return m;
}

} // namespace detail

inline TaskFiles write_task(const LearningTask& task)
{
    TaskFiles f;
    Program bg = task.background_program;
    std::set<std::string> printed;
    for (const auto& s : bg.statements)
        printed.insert(to_string(s));
    for (const auto& w : task.background) {
        Statement s = w.probability == 1.0 ? Statement{Fact{w.atom}} : Statement{ProbFact{w.probability, w.atom}};
        if (printed.insert(to_string(s)).second)
            bg.add(s);
    }
    f.background = print(bg);
    Program ex;
    for (const auto& a : task.positives)
        ex.add(Evidence{a, true});
    for (const auto& a : task.negatives)
        ex.add(Evidence{a, false});
    f.examples = print(ex);
    Program bias;
    bias.add(Fact{Atom{"target", {detail::mode_term(task.target)}}});
    for (const auto& m : task.bias)
        bias.add(Fact{Atom{"mode", {detail::mode_term(m)}}});
    f.bias = print(bias);
    return f;
}

inline LearningTask read_task(const TaskFiles& f)
{
    LearningTask task;
    task.background_program = parse(f.background);
    bool have_target = false;
    for (const auto& s : parse(f.bias).statements) {
        const auto* fact = std::get_if<Fact>(&s);
        if (!fact || fact->atom.arity() != 1)
            throw ContractError("bias file may only hold target/1 and mode/1 facts");
        if (fact->atom.predicate == "target") {
            task.target = detail::read_mode(fact->atom.args[0]);
            have_target = true;
        } else if (fact->atom.predicate == "mode") {
            task.bias.push_back(detail::read_mode(fact->atom.args[0]));
        } else {
            throw ContractError("unknown bias declaration " + fact->atom.predicate);
        }
    }
    if (!have_target)
        throw ContractError("bias file has no target declaration");
    for (const auto& s : task.background_program.statements) {
        if (const auto* x = std::get_if<Fact>(&s))
            task.background.push_back({x->atom, 1.0});
        else if (const auto* x = std::get_if<ProbFact>(&s); x && x->atom.is_ground())
            task.background.push_back({x->atom, x->probability});
    }
    for (const auto& s : parse(f.examples).statements) {
        const auto* e = std::get_if<Evidence>(&s);
        if (!e)
            throw ContractError("examples file may only hold evidence/1,2");
        (e->value ? task.positives : task.negatives).push_back(e->atom);
    }
    return task;
}

} // namespace pplp
