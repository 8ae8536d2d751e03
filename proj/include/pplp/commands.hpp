#pragma once

// Pipeline steps behind the command-line tool. Each takes text or tables and returns text or JSON
// so that it can be driven without touching the file system.

#include <pplp/csv.hpp>
#include <pplp/density.hpp>
#include <pplp/engine.hpp>
#include <pplp/rulelearn.hpp>
#include <pplp/transform.hpp>

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace pplp
{

using Json = nlohmann::ordered_json;

enum class LearnMethod
{
    Auto,
    EqualWidth,
    EqualFrequency,
    Distance
};

inline LearnMethod parse_method(const std::string& s)
{
    if (s == "auto")
        return LearnMethod::Auto;
    if (s == "ew")
        return LearnMethod::EqualWidth;
    if (s == "ef")
        return LearnMethod::EqualFrequency;
    if (s == "distance")
        return LearnMethod::Distance;
    throw ContractError("unknown method '" + s + "' (expected ew, ef, distance or auto)");
}

struct RunConfig
{
    std::size_t max_size = 40;
    std::size_t max_order = 8;
    std::optional<std::size_t> bins;
    LearnMethod method = LearnMethod::Auto;
    std::string target;                         // label column (learn) or target predicate (induce)
    std::string entity;                         // entity column
    std::uint64_t seed = 0;
    std::optional<std::size_t> sample;          // learn from a seeded subsample of this size
    double choice_cap = 16777216.0;
    std::map<std::string, std::string> aliases; // piece predicate -> display name
    EmOptions em;
};

/// Lower-case identifier made from a column name.
inline std::string predicate_name(const std::string& column)
{
    std::string s;
    for (char c : column) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u))
            s += static_cast<char>(std::tolower(u));
        else if (!s.empty() && s.back() != '_')
            s += '_';
    }
    while (!s.empty() && s.back() == '_')
        s.pop_back();
    if (s.empty() || !std::islower(static_cast<unsigned char>(s[0])))
        s = "a_" + s;
    return s;
}

struct LearnOutput
{
    std::string program;
    Json stats;
};

namespace detail
{

inline std::string value_variable(const std::string& name, bool entity)
{
    const std::string v(1, static_cast<char>(std::toupper(static_cast<unsigned char>(name[0]))));
    return entity && v == "E" ? "V" : v;
}

/// Density block: one guarded continuous fact per bin.
inline void emit_density(Program& out, Json& pieces, const std::string& name, const DensityModel& m, bool entity,
                         const std::map<std::string, std::string>& aliases)
{
    const std::string var = value_variable(name, entity);
    std::vector<Term> args;
    if (entity)
        args.push_back(Term::variable("E"));
    args.push_back(Term::variable(var));
    const auto& cuts = m.density.cutpoints();
    for (std::size_t j = 0; j < m.density.size(); ++j) {
        std::string piece = name + "_" + std::to_string(j + 1);
        if (auto it = aliases.find(piece); it != aliases.end())
            piece = it->second;
        const Atom head{piece, args};
        out.add(ContinuousFact{{var}, m.density.piece(j), head});
        out.add(Clause{head,
                       {Literal{Atom{name, args}, false},
                        Literal{Atom{"ininterval", {Term::variable(var), Term::number(cuts[j]), Term::number(cuts[j + 1])}},
                                false}}});
        pieces.push_back(Json{{"predicate", piece},
                              {"lo", cuts[j]},
                              {"hi", cuts[j + 1]},
                              {"mass", integrate_poly(m.density.piece(j), cuts[j], cuts[j + 1])}});
    }
}

} // namespace detail

/// Learns one density per column and prints them as guarded continuous facts.
inline LearnOutput cmd_learn(const Table& table, const std::vector<std::string>& columns, const RunConfig& cfg)
{
    if (columns.empty())
        throw ContractError("no columns selected");
    const bool entity = !cfg.entity.empty();
    if (entity)
        table.column(cfg.entity);

    Program prog;
    Json attrs = Json::array();
    std::size_t ef = 0, bins_total = 0;
    for (const auto& col : columns) {
        const auto data = numeric_column(table, col);
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < data.cells.size(); ++r)
            if (data.cells[r])
                rows.push_back(r);
        if (cfg.sample && *cfg.sample < rows.size()) {
            std::mt19937_64 rng(cfg.seed);
            std::shuffle(rows.begin(), rows.end(), rng);
            rows.resize(*cfg.sample);
            std::sort(rows.begin(), rows.end());
        }
        std::vector<double> xs;
        for (auto r : rows)
            xs.push_back(*data.cells[r]);
        if (detail::distinct_count(detail::sorted_finite(xs)) < 2)
            throw DegenerateInput("column '" + col + "' needs at least two distinct values");

        DensityModel m;
        std::optional<double> pct_ef;
        if (cfg.method == LearnMethod::Distance) {
            if (cfg.target.empty())
                throw ContractError("--method distance needs a --target label column");
            const std::size_t lc = table.column(cfg.target);
            std::map<std::string, int> label_ids;
            std::vector<LabelledValue> lv;
            for (auto r : rows) {
                const auto& label = table.rows[r][lc];
                if (label.empty())
                    continue;
                auto [it, fresh] = label_ids.emplace(label, static_cast<int>(label_ids.size()));
                lv.push_back({*data.cells[r], it->second});
            }
            m = fit_supervised(lv, cfg.bins.value_or(0), cfg.max_order, cfg.em);
        } else {
            SearchOptions so;
            so.max_size = cfg.bins.value_or(cfg.max_size);
            so.min_size = cfg.bins.value_or(2);
            so.max_order = cfg.max_order;
            so.em = cfg.em;
            if (cfg.method == LearnMethod::EqualWidth)
                so.methods = {BinningMethod::EqualWidth};
            else if (cfg.method == LearnMethod::EqualFrequency)
                so.methods = {BinningMethod::EqualFrequency};
            auto res = build_pp_structure(xs, so);
            m = std::move(res.best);
            if (cfg.method == LearnMethod::Auto)
                pct_ef = res.pct_ef;
        }

        const std::string name = predicate_name(col);
        Json pieces = Json::array();
        Program block;
        detail::emit_density(block, pieces, name, m, entity, cfg.aliases);
        for (auto& s : block.statements)
            prog.add(std::move(s));
        ef += m.discretization.method == BinningMethod::EqualFrequency ? 1 : 0;
        bins_total += m.discretization.bins();
        attrs.push_back(Json{{"column", col},
                             {"attribute", predicate_key(name, entity ? 2 : 1)},
                             {"n", xs.size()},
                             {"missing", data.missing},
                             {"method", std::string(to_string(m.discretization.method))},
                             {"bins", m.discretization.bins()},
                             {"degree", m.degree},
                             {"log_likelihood", m.log_likelihood},
                             {"bic", m.bic},
                             {"em_iterations", m.iterations},
                             {"pct_ef_pairs", pct_ef ? Json(*pct_ef) : Json(nullptr)},
                             {"pieces", pieces}});
    }
    const double n = static_cast<double>(columns.size());
    Json stats{{"n_cont", columns.size()},
               {"avg_bins", static_cast<double>(bins_total) / n},
               {"pct_ef", 100.0 * static_cast<double>(ef) / n},
               {"seed", cfg.seed},
               {"attributes", attrs}};
    return {print(prog), stats};
}

inline Json to_json(const QueryResult& r)
{
    return Json{{"query", to_string(r.query)}, {"probability", r.probability}, {"conditioned", r.conditioned}};
}

/// Answers the program's queries; `evidence` is extra program text holding evidence/1,2 statements.
inline Json cmd_query(const std::string& program, const std::string& evidence, const RunConfig& cfg)
{
    Program p = parse(program);
    if (!evidence.empty())
        for (const auto& s : parse(evidence).statements)
            p.add(s);
    const auto hp = load_program(std::move(p));
    EngineOptions opt;
    opt.choice_cap = cfg.choice_cap;
    const auto gp = ground(hp, opt);
    const auto part = partition_domains(gp);
    Json results = Json::array();
    for (const auto& r : solve(gp, part, opt))
        results.push_back(to_json(r));
    std::vector<std::string> ev;
    for (const auto& id_value : gp.evidence)
        ev.push_back((id_value.second ? "" : "\\+ ") + to_string(gp.atoms[id_value.first]));
    return Json{{"results", results},
                {"evidence", ev},
                {"cells", part.cell_count()},
                {"choices", gp.choices.size()}};
}

inline Json to_json(const PieceMapping& m)
{
    Json region = Json::array();
    for (const auto& b : m.region.bounds)
        region.push_back(Json::array({b.lo, b.hi}));
    return Json{{"piece", m.piece},
                {"attribute", m.attribute},
                {"region", region},
                {"probability", m.probability},
                {"parent", m.parent.empty() ? Json(nullptr) : Json(m.parent)}};
}

struct TransformOutput
{
    std::string program;
    Json mapping;
};

/// Discretizes a hybrid program. With a data table and an entity column, piece facts for each
/// observed entity of every attribute found among the columns are appended.
inline TransformOutput cmd_transform(const std::string& program, const Table* data, const RunConfig& cfg)
{
    const auto dp = discretize_program(parse(program));
    Program out = dp.program;
    if (data) {
        if (cfg.entity.empty())
            throw ContractError("entity facts need an --entity column");
        const std::size_t ec = data->column(cfg.entity);
        std::set<std::string> attributes;
        for (const auto& m : dp.mapping)
            attributes.insert(m.attribute);
        for (const auto& akey : attributes) {
            const std::string name = akey.substr(0, akey.rfind('/'));
            std::optional<std::size_t> col;
            for (std::size_t c = 0; c < data->header.size(); ++c)
                if (predicate_name(data->header[c]) == name)
                    col = c;
            if (!col)
                continue;
            const auto values = numeric_column(*data, data->header[*col]);
            for (std::size_t r = 0; r < data->rows.size(); ++r)
                for (auto& s : entity_piece_facts(dp, akey, {Term::symbol(data->rows[r][ec])}, values.cells[r]))
                    out.add(std::move(s));
        }
    }
    Json mapping = Json::array();
    for (const auto& m : dp.mapping)
        mapping.push_back(to_json(m));
    return {print(out), mapping};
}

struct InduceOutput
{
    std::string hypothesis;
    Json stats;
    TaskFiles task;
};

/// Learns rules for `cfg.target` from a (hybrid or already discretized) program and an examples
/// file: ground target facts or evidence are examples, any other ground facts join the background.
inline InduceOutput cmd_induce(const std::string& program, const std::string& examples, const RunConfig& cfg,
                               const RuleLearnOptions& ropt = {})
{
    if (cfg.target.empty())
        throw ContractError("no target predicate given");
    std::string target = cfg.target;
    std::optional<std::size_t> arity;
    if (auto slash = target.rfind('/'); slash != std::string::npos) {
        arity = std::stoul(target.substr(slash + 1));
        target = target.substr(0, slash);
    }

    const Program parsed = parse(program);
    DiscretizedProgram dp;
    if (parsed.all<ContinuousFact>().empty())
        dp.program = parsed;
    else
        dp = discretize_program(parsed);

    std::vector<Atom> pos, neg;
    std::vector<Statement> extra;
    for (const auto& s : parse(examples).statements) {
        const Atom* a = nullptr;
        bool value = true;
        if (const auto* f = std::get_if<Fact>(&s))
            a = &f->atom;
        else if (const auto* e = std::get_if<Evidence>(&s)) {
            a = &e->atom;
            value = e->value;
        }
        if (a && a->predicate == target && (!arity || a->arity() == *arity)) {
            if (arity && a->arity() != *arity)
                continue;
            arity = a->arity();
            (value ? pos : neg).push_back(*a);
        } else if (std::holds_alternative<Fact>(s) || std::holds_alternative<ProbFact>(s)) {
            extra.push_back(s);
        }
    }
    if (pos.empty())
        throw ContractError("no positive examples of " + target);
    auto task = emit_learning_task(dp, target, *arity, pos, extra);
    for (const auto& a : neg)
        if (std::find(task.negatives.begin(), task.negatives.end(), a) == task.negatives.end())
            task.negatives.push_back(a);

    const auto h = induce(task, ropt);
    const auto st = score_hypothesis(h);
    auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
    Json clauses = Json::array();
    for (const auto& c : h.clauses)
        clauses.push_back(Json{{"clause", to_string(Statement{c.clause})},
                               {"precision", c.precision},
                               {"positives", c.positives},
                               {"negatives", c.negatives},
                               {"best_effort", c.best_effort}});
    std::vector<std::string> uncovered;
    for (const auto& a : h.uncovered)
        uncovered.push_back(to_string(a));
    Json stats{{"target", predicate_key(target, *arity)},
               {"examples", {{"positive", task.positives.size()}, {"negative", task.negatives.size()}}},
               {"prec", opt(st.precision)},
               {"neg", opt(st.negations)},
               {"pred", opt(st.predicates)},
               {"rules", st.rules},
               {"residual", h.residual},
               {"uncovered", uncovered},
               {"clauses", clauses}};
    return {print(to_program(h)), stats, write_task(task)};
}

namespace detail
{

inline const AttributeDensity& find_attribute(const HybridProgram& hp, const std::string& name)
{
    if (const auto* a = hp.attribute(name))
        return *a;
    const AttributeDensity* found = nullptr;
    for (const auto& [k, a] : hp.attributes)
        if (a.name == name) {
            if (found)
                throw ContractError("attribute name '" + name + "' is ambiguous; use name/arity");
            found = &a;
        }
    if (!found)
        throw ContractError("no density for attribute '" + name + "'");
    return *found;
}

} // namespace detail

/// Density samples at `npoints` evenly spaced points over the attribute's support, as CSV.
inline std::string cmd_plotdata(const std::string& program, const std::string& attribute, std::size_t npoints)
{
    if (npoints == 0)
        throw ContractError("need at least one point");
    const auto hp = load_program(program);
    const auto& ad = detail::find_attribute(hp, attribute);
    if (ad.dimension() != 1)
        throw ContractError("plot data is only produced for univariate attributes");
    const auto& cuts = ad.univariate.cutpoints();
    const double lo = cuts.front(), hi = cuts.back();
    std::string out = "x,density\n";
    for (std::size_t i = 0; i < npoints; ++i) {
        const double x = npoints == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(npoints - 1);
        out += format_number(x) + "," + format_number(ad.univariate(x)) + "\n";
    }
    return out;
}

/// Summary of a program: statement counts and, per attribute, pieces, support, degree and mass.
inline Json cmd_stats(const std::string& program)
{
    const auto hp = load_program(program);
    const auto& p = hp.program;
    Json attrs = Json::array();
    for (const auto& [k, ad] : hp.attributes) {
        Json a{{"attribute", k}, {"dimension", ad.dimension()}, {"pieces", ad.pieces.size()}};
        double mass = 0;
        for (const auto& piece : ad.pieces)
            mass += piece.mass;
        if (ad.dimension() == 1) {
            const auto& cuts = ad.univariate.cutpoints();
            std::size_t degree = 0;
            for (std::size_t j = 0; j < ad.univariate.size(); ++j)
                degree = std::max(degree, ad.univariate.piece(j).order());
            a["support"] = Json::array({cuts.front(), cuts.back()});
            a["max_degree"] = degree;
        }
        a["mass"] = mass;
        attrs.push_back(a);
    }
    return Json{{"n_cont", hp.attributes.size()},
                {"facts", p.all<Fact>().size()},
                {"probabilistic_facts", p.all<ProbFact>().size()},
                {"continuous_facts", p.all<ContinuousFact>().size()},
                {"clauses", p.all<Clause>().size()},
                {"queries", p.all<Query>().size()},
                {"evidence", p.all<Evidence>().size()},
                {"attributes", attrs}};
}

} // namespace pplp
